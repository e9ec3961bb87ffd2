#include "ecsgen/lossless.hpp"

#include <cmath>
#include <cstdio>

namespace ecsgen {

namespace {

void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("time must be finite and >= 0");
}

double sign_of(BranchSign s) { return s == BranchSign::plus ? 1.0 : -1.0; }

// exp(-2|alpha|^2 - 2|beta|^2): overlap between the two field branches.
double branch_overlap(const CoherentPair& pair) {
    return std::exp(-2.0 * (std::norm(pair.alpha) + std::norm(pair.beta)));
}

double clamp_report(double c) {
    if (c > 1.0 + 1e-9)
        std::fprintf(stderr, "concurrence clamp: %.17g exceeds 1\n", c);
    return std::min(1.0, std::max(0.0, c));
}

} // namespace

CoherentPair coherent_amplitudes(const ModelParams& p, double t) {
    check_time(t);
    const double u = rabi_norm(p.omega1, p.omega2);
    const cplx mi(0.0, -1.0);
    return {mi * (p.omega1 * p.g1 * t / (2.0 * u)), mi * (p.omega2 * p.g2 * t / (2.0 * u))};
}

double branch_norm(const CoherentPair& pair, double phase, BranchSign sign) {
    return 2.0 * (1.0 + sign_of(sign) * std::cos(2.0 * phase) * branch_overlap(pair));
}

ProjectedPureECS projected_state(const ModelParams& p, double t) {
    check_time(t);
    ProjectedPureECS s;
    s.pair = coherent_amplitudes(p, t);
    s.sign = p.sign;
    s.phase = rabi_norm(p.omega1, p.omega2) * t;
    s.norm = branch_norm(s.pair, s.phase, s.sign);
    if (!(s.norm > 0.0))
        throw degenerate_state_error("projected_state: branch norm vanishes (odd branch at t = 0)");
    return s;
}

std::pair<double, double> mean_photon_numbers(const ProjectedPureECS& s) {
    if (!(s.norm > 0.0))
        throw degenerate_state_error("mean_photon_numbers: branch norm vanishes");
    // Interference term carries the opposite sign of the branch norm.
    const double inter = -sign_of(s.sign) * std::cos(2.0 * s.phase) * branch_overlap(s.pair);
    const double n1 = 2.0 * std::norm(s.pair.alpha) / s.norm * (1.0 + inter);
    const double n2 = 2.0 * std::norm(s.pair.beta) / s.norm * (1.0 + inter);
    return {n1, n2};
}

std::pair<double, double> mean_photon_numbers(const ModelParams& p, double t) {
    return mean_photon_numbers(projected_state(p, t));
}

double concurrence_lossless(const ProjectedPureECS& s) {
    if (!(s.norm > 0.0))
        throw degenerate_state_error("concurrence_lossless: branch norm vanishes");
    const double f1 = -std::expm1(-4.0 * std::norm(s.pair.alpha));
    const double f2 = -std::expm1(-4.0 * std::norm(s.pair.beta));
    return clamp_report(2.0 * std::sqrt(f1 * f2) / s.norm);
}

double concurrence_lossless(const ModelParams& p, double t) {
    return concurrence_lossless(projected_state(p, t));
}

std::array<double, 3> detection_probabilities(const ModelParams& p, double t) {
    check_time(t);
    const DressedFrame f = dressed_frame(p);
    const CoherentPair pair = coherent_amplitudes(p, t);
    const double phase = f.u * t;
    const double m_plus = branch_norm(pair, phase, BranchSign::plus);
    const double m_minus = branch_norm(pair, phase, BranchSign::minus);
    // |a> rides the even field branch with weight 1/2, |b> and |c> the odd
    // one with weights omega2/(2u) and omega1/(2u).
    const double w_b = p.omega2 / (2.0 * f.u);
    const double w_c = p.omega1 / (2.0 * f.u);
    return {0.25 * m_plus, w_b * w_b * m_minus, w_c * w_c * m_minus};
}

BranchSign branch_for_outcome(AtomLevel outcome) {
    return outcome == AtomLevel::a ? BranchSign::plus : BranchSign::minus;
}

ECSSpec to_ecs_spec(const ProjectedPureECS& s) {
    if (!(s.norm > 0.0))
        throw degenerate_state_error("to_ecs_spec: branch norm vanishes");
    ECSSpec e;
    const double inv = 1.0 / std::sqrt(s.norm);
    e.mu = std::polar(inv, -s.phase);
    e.nu = sign_of(s.sign) * std::polar(inv, s.phase);
    e.label1_a = s.pair.alpha;
    e.label2_a = s.pair.beta;
    e.label1_b = -s.pair.alpha;
    e.label2_b = -s.pair.beta;
    return e;
}

} // namespace ecsgen
