#pragma once

#include <utility>

#include "ecsgen/ecs.hpp"
#include "ecsgen/lossless.hpp"
#include "ecsgen/model.hpp"

namespace ecsgen {

// Cavity decay convention: rho' = -i[H,rho] + kappa sum_i (2 a_i rho a_i+ -
// a_i+ a_i rho - rho a_i+ a_i), so a free coherent amplitude decays as
// e^{-kappa t} and a free photon number as e^{-2 kappa t}.

// alpha' = (-i omega1 g1 / (2 u kappa)) (1 - e^{-kappa t}), beta' alike.
// Throws zero_kappa_error for kappa <= 0.
CoherentPair lossy_amplitudes(const ModelParams& p, double t);

// Same, but kappa == 0 falls back to the unitary amplitudes (the kappa -> 0 limit).
CoherentPair lossy_amplitudes_or_limit(const ModelParams& p, double t);

// Coherence survival factor q(t) of the cross branch,
//   ln q = -(omega1^2 g1^2 + omega2^2 g2^2) / (2 u^2 kappa^2)
//          * (2 kappa t + 4 e^{-kappa t} - e^{-2 kappa t} - 3),
// evaluated in extended precision with a series for kappa t < 1e-4.
double decoherence_factor(const ModelParams& p, double t);
double log_decoherence_factor(const ModelParams& p, double t);

// Atom-field density before detection, symbolic four-branch form:
//   1/2 [ |B,a',b'><B,a',b'| + |C,-a',-b'><C,-a',-b'|
//         - q (e^{-2iut} |B,a',b'><C,-a',-b'| + h.c.) ].
struct DressedBranchDensity {
    CoherentPair pair;
    double q = 1.0;
    double phase = 0.0; // u t; 0 gives the co-rotating (undriven-frame) density
};

DressedBranchDensity dressed_density(const ModelParams& p, double t);

// Field density after detecting the atom in |a>:
//   1/S [ |a',b'><a',b'| + |-a',-b'><-a',-b'|
//         + q (e^{-2iut} |a',b'><-a',-b'| + h.c.) ],
//   S = 2 + 2 q P1 P2 cos(2ut), P_i = e^{-2|amp_i|^2}.
struct LossyFieldState {
    CoherentPair pair;
    double q = 1.0;
    double phase = 0.0;   // u t
    double s_norm = 4.0;  // S
    double p1 = 1.0;      // e^{-2|alpha'|^2}
    double p2 = 1.0;      // e^{-2|beta'|^2}
    double log_q = 0.0;   // kept alongside q; q itself may underflow
};

// Assemble the projected state from raw ingredients (used for direct scans).
LossyFieldState make_lossy_state(const CoherentPair& pair, double log_q, double phase);
LossyFieldState projected_mixed_state(const ModelParams& p, double t);

// 4x4 density of the projected state in the per-mode bases
// {|alpha'>, orthogonalized |-alpha'>} x {|beta'>, orthogonalized |-beta'>}.
// Throws degenerate_mode_error at P_i = 1 (t = 0).
TwoQubitDensity field_density_matrix(const LossyFieldState& s);
TwoQubitDensity field_density_matrix(const ModelParams& p, double t);

// C = 2 M1 M2 q / S with M_i = sqrt(1 - P_i^2); clamped to [0,1].
double concurrence_lossy(const LossyFieldState& s);
double concurrence_lossy(const ModelParams& p, double t);

// N1 = (2|alpha'|^2 / S)(1 - q P1 P2 cos 2ut), N2 alike.
std::pair<double, double> lossy_photon_numbers(const LossyFieldState& s);
std::pair<double, double> lossy_photon_numbers(const ModelParams& p, double t);

// Probability of the |a> detection outcome (trace of the unnormalized
// projected block): S / 4.
double detection_probability_lossy(const LossyFieldState& s);

} // namespace ecsgen
