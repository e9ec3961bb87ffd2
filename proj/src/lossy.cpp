#include "ecsgen/lossy.hpp"

#include <cmath>

namespace ecsgen {

namespace {

void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("time must be finite and >= 0");
}

void check_kappa(const ModelParams& p) {
    if (!(p.kappa > 0.0))
        throw zero_kappa_error("kappa must be positive here; the lossless module covers kappa == 0");
}

// f(x) = 2x + 4 e^{-x} - e^{-2x} - 3, the decay shape in ln q. The direct
// form cancels to O(x^3) near 0, so switch to the series there.
long double decay_shape(long double x) {
    if (x < 1e-4L) {
        // f = (2/3) x^3 - (1/2) x^4 + (7/30) x^5 + O(x^6)
        return x * x * x * (2.0L / 3.0L + x * (-0.5L + x * (7.0L / 30.0L)));
    }
    return 2.0L * x + 4.0L * std::exp(-x) - std::exp(-2.0L * x) - 3.0L;
}

} // namespace

CoherentPair lossy_amplitudes(const ModelParams& p, double t) {
    check_time(t);
    check_kappa(p);
    const double u = rabi_norm(p.omega1, p.omega2);
    const double ramp = -std::expm1(-p.kappa * t); // 1 - e^{-kappa t}
    const cplx mi(0.0, -1.0);
    return {mi * (p.omega1 * p.g1 / (2.0 * u * p.kappa) * ramp),
            mi * (p.omega2 * p.g2 / (2.0 * u * p.kappa) * ramp)};
}

CoherentPair lossy_amplitudes_or_limit(const ModelParams& p, double t) {
    if (p.kappa == 0.0)
        return coherent_amplitudes(p, t);
    return lossy_amplitudes(p, t);
}

double log_decoherence_factor(const ModelParams& p, double t) {
    check_time(t);
    check_kappa(p);
    const long double u2 = (long double)p.omega1 * p.omega1 + (long double)p.omega2 * p.omega2;
    const long double num = (long double)p.omega1 * p.omega1 * p.g1 * p.g1 +
                            (long double)p.omega2 * p.omega2 * p.g2 * p.g2;
    const long double k = (long double)p.kappa;
    const long double scale = num / (2.0L * u2 * k * k);
    return (double)(-scale * decay_shape(k * (long double)t));
}

double decoherence_factor(const ModelParams& p, double t) {
    return std::exp(log_decoherence_factor(p, t));
}

DressedBranchDensity dressed_density(const ModelParams& p, double t) {
    DressedBranchDensity d;
    d.pair = lossy_amplitudes(p, t);
    d.q = decoherence_factor(p, t);
    d.phase = rabi_norm(p.omega1, p.omega2) * t;
    return d;
}

LossyFieldState make_lossy_state(const CoherentPair& pair, double log_q, double phase) {
    if (!(log_q <= 0.0))
        throw validation_error("make_lossy_state: ln q must be <= 0");
    LossyFieldState s;
    s.pair = pair;
    s.log_q = log_q;
    s.q = std::exp(log_q);
    s.phase = phase;
    s.p1 = std::exp(-2.0 * std::norm(pair.alpha));
    s.p2 = std::exp(-2.0 * std::norm(pair.beta));
    // S assembled in log space: q, P1, P2 may individually underflow.
    const double w = std::exp(log_q - 2.0 * (std::norm(pair.alpha) + std::norm(pair.beta)));
    s.s_norm = 2.0 * (1.0 + w * std::cos(2.0 * phase));
    return s;
}

LossyFieldState projected_mixed_state(const ModelParams& p, double t) {
    return make_lossy_state(lossy_amplitudes(p, t), log_decoherence_factor(p, t),
                            rabi_norm(p.omega1, p.omega2) * t);
}

TwoQubitDensity field_density_matrix(const LossyFieldState& s) {
    if (s.p1 >= 1.0 - 1e-14 || s.p2 >= 1.0 - 1e-14)
        throw degenerate_mode_error("field_density_matrix: vanishing amplitudes leave one basis state");
    const double p1 = s.p1, p2 = s.p2;
    const double m1 = std::sqrt(-std::expm1(-4.0 * std::norm(s.pair.alpha)));
    const double m2 = std::sqrt(-std::expm1(-4.0 * std::norm(s.pair.beta)));
    const cplx qp = s.q * std::polar(1.0, -2.0 * s.phase); // q e^{-2iut}

    // |a',b'> = |00>; |-a',-b'> = (p1|0>+m1|1>)(p2|0>+m2|1>).
    Eigen::Vector4cd v;
    v << p1 * p2, p1 * m2, m1 * p2, m1 * m2;
    Eigen::Vector4cd e0 = Eigen::Vector4cd::Zero();
    e0(0) = 1.0;

    TwoQubitDensity out;
    out.rho = (e0 * e0.adjoint() + v * v.adjoint() + qp * (e0 * v.adjoint()) +
               std::conj(qp) * (v * e0.adjoint())) /
              s.s_norm;
    out.validate();
    return out;
}

TwoQubitDensity field_density_matrix(const ModelParams& p, double t) {
    return field_density_matrix(projected_mixed_state(p, t));
}

double concurrence_lossy(const LossyFieldState& s) {
    const double m1 = std::sqrt(-std::expm1(-4.0 * std::norm(s.pair.alpha)));
    const double m2 = std::sqrt(-std::expm1(-4.0 * std::norm(s.pair.beta)));
    const double c = 2.0 * m1 * m2 * std::exp(s.log_q) / s.s_norm;
    return std::min(1.0, std::max(0.0, c));
}

double concurrence_lossy(const ModelParams& p, double t) {
    return concurrence_lossy(projected_mixed_state(p, t));
}

std::pair<double, double> lossy_photon_numbers(const LossyFieldState& s) {
    const double w = std::exp(s.log_q - 2.0 * (std::norm(s.pair.alpha) + std::norm(s.pair.beta)));
    const double inter = 1.0 - w * std::cos(2.0 * s.phase);
    return {2.0 * std::norm(s.pair.alpha) / s.s_norm * inter,
            2.0 * std::norm(s.pair.beta) / s.s_norm * inter};
}

std::pair<double, double> lossy_photon_numbers(const ModelParams& p, double t) {
    return lossy_photon_numbers(projected_mixed_state(p, t));
}

double detection_probability_lossy(const LossyFieldState& s) { return s.s_norm / 4.0; }

} // namespace ecsgen
