#include "ecsgen/model.hpp"

#include <algorithm>
#include <cmath>

namespace ecsgen {

ModelParams::ModelParams(double omega1_, double omega2_, double g1_, double g2_,
                         double kappa_, BranchSign sign_)
    : omega1(omega1_), omega2(omega2_), g1(g1_), g2(g2_), kappa(kappa_), sign(sign_) {
    if (!(omega1 > 0.0) || !(omega2 > 0.0))
        throw validation_error("ModelParams: Rabi frequencies must be positive");
    if (!(g1 > 0.0) || !(g2 > 0.0))
        throw validation_error("ModelParams: cavity couplings must be positive");
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
        throw validation_error("ModelParams: kappa must be finite and >= 0");
    if (!std::isfinite(omega1) || !std::isfinite(omega2) || !std::isfinite(g1) || !std::isfinite(g2))
        throw validation_error("ModelParams: parameters must be finite");
    strong_driving = std::min(omega1, omega2) >= 10.0 * std::max(g1, g2);
}

double rabi_norm(double omega1, double omega2) {
    if (!(omega1 > 0.0) || !(omega2 > 0.0) || !std::isfinite(omega1) || !std::isfinite(omega2))
        throw std::domain_error("rabi_norm: Rabi frequencies must be positive and finite");
    return std::hypot(omega1, omega2);
}

DressedFrame dressed_frame(const ModelParams& p) {
    DressedFrame f;
    f.u = rabi_norm(p.omega1, p.omega2);
    const double u = f.u;
    const double s2u = std::sqrt(2.0) * u;
    f.basis_change << 0.0, -p.omega1 / u, p.omega2 / u,
        u / s2u, p.omega2 / s2u, p.omega1 / s2u,
        -u / s2u, p.omega2 / s2u, p.omega1 / s2u;
    return f;
}

Eigen::Vector3d atomic_in_dressed(AtomLevel level, const DressedFrame& frame) {
    // Column of the (orthogonal) basis change: <X|level> for X in (A,B,C).
    return frame.basis_change.col(static_cast<int>(level));
}

Eigen::Matrix3d drive_hamiltonian(const ModelParams& p) {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    h(0, 2) = h(2, 0) = p.omega1;
    h(0, 1) = h(1, 0) = p.omega2;
    return h;
}

} // namespace ecsgen
