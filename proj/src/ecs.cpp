#include "ecsgen/ecs.hpp"

#include <cmath>

namespace ecsgen {

namespace {

constexpr double norm_tol = 1e-10;
constexpr double herm_tol = 1e-12;
constexpr double trace_tol = 1e-12;
constexpr double psd_tol = -1e-10;

// sy x sy in the computational basis: antidiagonal (-1, 1, 1, -1).
Eigen::Matrix4cd spin_flip_kernel() {
    Eigen::Matrix4cd y = Eigen::Matrix4cd::Zero();
    y(0, 3) = -1.0;
    y(1, 2) = 1.0;
    y(2, 1) = 1.0;
    y(3, 0) = -1.0;
    return y;
}

} // namespace

cplx coherent_overlap(cplx x, cplx y) {
    return std::exp(-0.5 * std::norm(x) - 0.5 * std::norm(y) + std::conj(x) * y);
}

double ECSSpec::norm_squared() const {
    const cplx branch = coherent_overlap(label1_a, label1_b) * coherent_overlap(label2_a, label2_b);
    return std::norm(mu) + std::norm(nu) + 2.0 * std::real(std::conj(mu) * nu * branch);
}

void ECSSpec::validate() const {
    const double n2 = norm_squared();
    if (!std::isfinite(n2) || std::abs(n2 - 1.0) > norm_tol)
        throw validation_error("ECSSpec: superposition is not normalized");
}

ECSSpec ECSSpec::normalized(cplx mu_raw, cplx nu_raw, cplx l1a, cplx l2a, cplx l1b, cplx l2b) {
    ECSSpec s;
    s.mu = mu_raw;
    s.nu = nu_raw;
    s.label1_a = l1a;
    s.label2_a = l2a;
    s.label1_b = l1b;
    s.label2_b = l2b;
    const double n2 = s.norm_squared();
    if (!(n2 > 0.0) || !std::isfinite(n2))
        throw validation_error("ECSSpec: weights give zero norm");
    const double inv = 1.0 / std::sqrt(n2);
    s.mu *= inv;
    s.nu *= inv;
    return s;
}

OverlapData ecs_overlaps(const ECSSpec& spec, P2Convention conv) {
    OverlapData d;
    d.p1 = coherent_overlap(spec.label1_a, spec.label1_b);
    d.p2 = conv == P2Convention::per_mode
               ? coherent_overlap(spec.label2_a, spec.label2_b)
               : coherent_overlap(spec.label1_b, spec.label2_a);
    d.m1 = std::sqrt(std::max(0.0, 1.0 - std::norm(d.p1)));
    d.m2 = std::sqrt(std::max(0.0, 1.0 - std::norm(d.p2)));
    return d;
}

void TwoQubitDensity::validate() const {
    if (!rho.allFinite())
        throw validation_error("TwoQubitDensity: non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
        throw validation_error("TwoQubitDensity: not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > trace_tol)
        throw validation_error("TwoQubitDensity: trace is not 1");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < psd_tol)
        throw validation_error("TwoQubitDensity: negative eigenvalue beyond tolerance");
}

std::pair<TwoQubitDensity, OverlapData> qubit_map(const ECSSpec& spec) {
    spec.validate();
    const OverlapData d = ecs_overlaps(spec);
    if (std::norm(d.p1) >= 1.0 - 1e-14 || std::norm(d.p2) >= 1.0 - 1e-14)
        throw degenerate_mode_error("qubit_map: coincident labels leave no second basis state");

    // |branch a> = |00>, |branch b> = (p1|0>+m1|1>)(p2|0>+m2|1>).
    Eigen::Vector4cd c;
    c << spec.mu + spec.nu * d.p1 * d.p2,
        spec.nu * d.p1 * d.m2,
        spec.nu * d.m1 * d.p2,
        spec.nu * d.m1 * d.m2;

    TwoQubitDensity out;
    out.rho = c * c.adjoint();
    out.validate();
    return {out, d};
}

double wootters_concurrence(const TwoQubitDensity& density) {
    density.validate();
    const Eigen::Matrix4cd& rho = density.rho;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(rho);
    Eigen::Vector4d ev = es.eigenvalues();
    for (int i = 0; i < 4; ++i) {
        if (ev(i) < psd_tol)
            throw validation_error("wootters_concurrence: input not positive semidefinite");
        ev(i) = std::max(ev(i), 0.0);
    }
    const Eigen::Matrix4cd sqrt_rho =
        es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();

    // Singular values of sqrt(rho)^* Y sqrt(rho) are the Wootters lambdas;
    // this avoids taking square roots of near-zero eigenvalues.
    const Eigen::Matrix4cd b = sqrt_rho.conjugate() * spin_flip_kernel() * sqrt_rho;
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(b);
    const Eigen::Vector4d& l = svd.singularValues();
    return std::max(0.0, l(0) - l(1) - l(2) - l(3));
}

double ecs_concurrence(const ECSSpec& spec, P2Convention conv) {
    const OverlapData d = ecs_overlaps(spec, conv);
    return 2.0 * std::abs(spec.mu) * std::abs(spec.nu) * d.m1 * d.m2;
}

} // namespace ecsgen
