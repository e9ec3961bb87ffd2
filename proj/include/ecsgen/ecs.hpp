#pragma once

#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "ecsgen/errors.hpp"

namespace ecsgen {

using cplx = std::complex<double>;

// <x|y> for coherent states: exp(-|x|^2/2 - |y|^2/2 + conj(x) y).
cplx coherent_overlap(cplx x, cplx y);

// Two-branch two-mode entangled coherent state
//   |Psi> = mu |l1_a, l2_a> + nu |l1_b, l2_b>
// with mode-1 labels (l1_a, l1_b) and mode-2 labels (l2_a, l2_b).
struct ECSSpec {
    cplx mu{0.0, 0.0}, nu{0.0, 0.0};
    cplx label1_a{0.0, 0.0}, label2_a{0.0, 0.0}; // branch a: |label1_a> |label2_a>
    cplx label1_b{0.0, 0.0}, label2_b{0.0, 0.0}; // branch b: |label1_b> |label2_b>

    // Squared norm of the superposition (1 when normalized).
    double norm_squared() const;
    // Throws validation_error unless |norm_squared() - 1| <= 1e-10.
    void validate() const;

    // Normalize raw weights against the branch overlap.
    static ECSSpec normalized(cplx mu_raw, cplx nu_raw, cplx l1a, cplx l2a, cplx l1b, cplx l2b);
};

// p2 choice kept switchable for auditing the closed form. `per_mode` pairs the
// two branch labels of mode 2 (the convention that reproduces the Wootters
// value); `cross_mode` pairs branch-b mode 1 against branch-a mode 2, which is
// dimensionally legal but wrong, and retained only for comparison.
enum class P2Convention { per_mode, cross_mode };

struct OverlapData {
    cplx p1{0.0, 0.0}; // <label1_a | label1_b>
    cplx p2{0.0, 0.0}; // <label2_a | label2_b> (per_mode)
    double m1 = 0.0;   // sqrt(1 - |p1|^2)
    double m2 = 0.0;   // sqrt(1 - |p2|^2)
};

OverlapData ecs_overlaps(const ECSSpec& spec, P2Convention conv = P2Convention::per_mode);

// Two-qubit density matrix in the computational basis |00>,|01>,|10>,|11>.
struct TwoQubitDensity {
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();

    // Hermitian to 1e-12, unit trace to 1e-12, eigenvalues >= -1e-10
    // (small negatives are clamped by consumers, larger ones reject).
    void validate() const;
};

// Map the ECS onto two qubits via per-mode bases {|0_i>, |1_i>} with
// |0_1> = |label1_a>, |1_1> = (|label1_b> - p1 |label1_a>) / m1 (mode 2 alike).
// Requires a normalized spec; throws degenerate_mode_error when a mode's two
// labels coincide (|p_i| = 1).
std::pair<TwoQubitDensity, OverlapData> qubit_map(const ECSSpec& spec);

// Wootters concurrence of an arbitrary two-qubit density matrix:
// C = max(0, l1 - l2 - l3 - l4), l_i the decreasing singular values of
// sqrt(rho)^* (sy x sy) sqrt(rho), equal to the square roots of the
// eigenvalues of rho (sy x sy) rho^* (sy x sy).
double wootters_concurrence(const TwoQubitDensity& rho);

// Closed form for the pure ECS: C = 2 |mu nu| m1 m2. Does not validate the
// spec; the overlaps only see label differences, so it is also usable for
// translated (un-normalized) audits.
double ecs_concurrence(const ECSSpec& spec, P2Convention conv = P2Convention::per_mode);

} // namespace ecsgen
