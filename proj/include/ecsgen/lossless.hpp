#pragma once

#include <array>
#include <complex>
#include <utility>

#include "ecsgen/ecs.hpp"
#include "ecsgen/model.hpp"

namespace ecsgen {

// Field amplitudes grown by the effective dressed-state coupling.
struct CoherentPair {
    cplx alpha{0.0, 0.0}; // mode 1
    cplx beta{0.0, 0.0};  // mode 2
};

// Unitary case: alpha = -i omega1 g1 t / (2u), beta = -i omega2 g2 t / (2u).
CoherentPair coherent_amplitudes(const ModelParams& p, double t);

// Field state after detecting the atom, one of
//   (e^{-iut}|alpha,beta> +/- e^{+iut}|-alpha,-beta>) / sqrt(M+-),
//   M+- = 2 [1 +/- cos(2ut) exp(-2|alpha|^2 - 2|beta|^2)].
struct ProjectedPureECS {
    CoherentPair pair;
    BranchSign sign = BranchSign::plus;
    double phase = 0.0; // u t
    double norm = 0.0;  // M+-
};

// Throws degenerate_state_error when the requested branch has M = 0
// (the minus branch at t = 0).
ProjectedPureECS projected_state(const ModelParams& p, double t);

// M+- for given amplitudes and phase.
double branch_norm(const CoherentPair& pair, double phase, BranchSign sign);

// Mean photon numbers (N1, N2) of the projected state:
//   N1 = (2|alpha|^2 / M+-) (1 -+ cos(2ut) exp(-2|alpha|^2 - 2|beta|^2)),
// the upper sign of M pairing with the lower sign in N.
std::pair<double, double> mean_photon_numbers(const ModelParams& p, double t);
std::pair<double, double> mean_photon_numbers(const ProjectedPureECS& s);

// Concurrence of the projected state,
//   C = sqrt[(1 - e^{-4|alpha|^2})(1 - e^{-4|beta|^2})] / [1 +/- cos(2ut) E],
// E = exp(-2|alpha|^2 - 2|beta|^2); clamped to [0,1], a clamp beyond 1e-9
// is reported on stderr.
double concurrence_lossless(const ModelParams& p, double t);
double concurrence_lossless(const ProjectedPureECS& s);

// Probabilities of finding the atom in a, b, c before the field projection.
// Detecting `a` selects the plus branch, `b` or `c` the minus branch.
std::array<double, 3> detection_probabilities(const ModelParams& p, double t);

// Branch selected by an atomic detection outcome.
BranchSign branch_for_outcome(AtomLevel outcome);

// The projected state as a generic two-branch ECS (weights e^{-+ i phase}/sqrt(M)).
ECSSpec to_ecs_spec(const ProjectedPureECS& s);

} // namespace ecsgen
