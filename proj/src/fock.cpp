#include "ecsgen/fock.hpp"

#include <algorithm>
#include <cmath>

namespace ecsgen {

namespace {

const cplx iu(0.0, 1.0);

double sparse_inf_norm(const SpMat& m) {
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            row_sum(it.row()) += std::abs(it.value());
    return row_sum.size() > 0 ? row_sum.maxCoeff() : 0.0;
}

// Mask selecting the top two Fock levels of either mode; works on the full
// space (3 atom blocks) and on the bare field space.
Eigen::VectorXd tail_mask(const TruncationSpec& spec, Eigen::Index dim) {
    const int fd = spec.field_dim();
    Eigen::VectorXd mask = Eigen::VectorXd::Zero(dim);
    const int blocks = dim == spec.total_dim() ? 3 : 1;
    if (dim != spec.total_dim() && dim != fd)
        throw validation_error("tail_mask: state dimension does not match the truncation");
    for (int b = 0; b < blocks; ++b)
        for (int n1 = 0; n1 < spec.dim1; ++n1)
            for (int n2 = 0; n2 < spec.dim2; ++n2)
                if (n1 >= spec.dim1 - 2 || n2 >= spec.dim2 - 2)
                    mask((b * spec.dim1 + n1) * spec.dim2 + n2) = 1.0;
    return mask;
}

void check_times(const std::vector<double>& times) {
    if (times.empty())
        throw validation_error("evolve: no sample times given");
    double prev = 0.0;
    for (double t : times) {
        if (!(t >= prev) || !std::isfinite(t))
            throw validation_error("evolve: sample times must be nondecreasing and >= 0");
        prev = t;
    }
}

void check_dt(const EvolveOptions& opt, const InteractionHamiltonian& h, double extra_rate) {
    if (!(opt.dt > 0.0) || !std::isfinite(opt.dt))
        throw validation_error("evolve: dt must be positive");
    const double bound = h.norm_bound() + extra_rate;
    if (opt.dt * bound > 0.05 * (1.0 + 1e-9))
        throw validation_error("evolve: dt too large for the operator norm (need dt*|H| <= 0.05)");
    if (h.max_frequency > 0.0 && opt.dt > 0.04 / h.max_frequency * (1.0 + 1e-9))
        throw validation_error("evolve: dt too large for the oscillation frequency (need dt <= 0.02/u)");
}

// Number of equal substeps covering `span` with width <= dt.
int substeps(double span, double dt) {
    if (span <= 0.0)
        return 0;
    return std::max(1, (int)std::ceil(span / dt - 1e-12));
}

Eigen::VectorXcd kron_vec(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    Eigen::VectorXcd out(x.size() * y.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out.segment(i * y.size(), y.size()) = x(i) * y;
    return out;
}

Eigen::MatrixXcd dense_sqrt_psd(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

TruncationSpec::TruncationSpec(int d1, int d2) : dim1(d1), dim2(d2) {
    if (d1 < 2 || d2 < 2)
        throw validation_error("TruncationSpec: need at least two Fock levels per mode");
}

SpMat OperatorSet::embed_atom(const Eigen::Matrix3cd& op) const {
    const int fd = spec.field_dim();
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 3; ++y) {
            if (op(x, y) == cplx(0.0, 0.0))
                continue;
            for (int k = 0; k < fd; ++k)
                trips.emplace_back(x * fd + k, y * fd + k, op(x, y));
        }
    SpMat m(spec.total_dim(), spec.total_dim());
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

SpMat OperatorSet::sigma_bare(AtomLevel x, AtomLevel y) const {
    Eigen::Matrix3cd op = Eigen::Matrix3cd::Zero();
    op(static_cast<int>(x), static_cast<int>(y)) = 1.0;
    return embed_atom(op);
}

SpMat OperatorSet::sigma_dressed(DressedLevel x, DressedLevel y) const {
    const Eigen::Vector3d vx = frame.dressed_ket(x);
    const Eigen::Vector3d vy = frame.dressed_ket(y);
    return embed_atom((vx * vy.transpose()).cast<cplx>());
}

OperatorSet build_operators(const TruncationSpec& spec, const DressedFrame& frame) {
    OperatorSet ops;
    ops.spec = spec;
    ops.frame = frame;

    std::vector<Eigen::Triplet<cplx>> t1, t2, tn1, tn2;
    for (int x = 0; x < 3; ++x)
        for (int n1 = 0; n1 < spec.dim1; ++n1)
            for (int n2 = 0; n2 < spec.dim2; ++n2) {
                const int col = spec.index(x, n1, n2);
                if (n1 > 0)
                    t1.emplace_back(spec.index(x, n1 - 1, n2), col, cplx(std::sqrt((double)n1), 0.0));
                if (n2 > 0)
                    t2.emplace_back(spec.index(x, n1, n2 - 1), col, cplx(std::sqrt((double)n2), 0.0));
                if (n1 > 0)
                    tn1.emplace_back(col, col, cplx((double)n1, 0.0));
                if (n2 > 0)
                    tn2.emplace_back(col, col, cplx((double)n2, 0.0));
            }
    const int d = spec.total_dim();
    ops.a1 = SpMat(d, d);
    ops.a2 = SpMat(d, d);
    ops.n1 = SpMat(d, d);
    ops.n2 = SpMat(d, d);
    ops.a1.setFromTriplets(t1.begin(), t1.end());
    ops.a2.setFromTriplets(t2.begin(), t2.end());
    ops.n1.setFromTriplets(tn1.begin(), tn1.end());
    ops.n2.setFromTriplets(tn2.begin(), tn2.end());
    return ops;
}

SpMat build_h_eff(const ModelParams& p, const OperatorSet& ops) {
    const double u = ops.frame.u;
    SpMat x1 = ops.a1 + SpMat(ops.a1.adjoint());
    SpMat x2 = ops.a2 + SpMat(ops.a2.adjoint());
    SpMat field = p.omega1 * p.g1 * x1 + p.omega2 * p.g2 * x2;
    SpMat proj = ops.sigma_dressed(DressedLevel::B, DressedLevel::B) -
                 ops.sigma_dressed(DressedLevel::C, DressedLevel::C);
    return SpMat((field * proj) / (2.0 * u));
}

InteractionHamiltonian build_h_interaction(const ModelParams& p, const OperatorSet& ops) {
    const double u = ops.frame.u;
    InteractionHamiltonian h;
    h.dim = ops.spec.total_dim();
    h.static_part = build_h_eff(p, ops);
    h.max_frequency = 2.0 * u;

    // Dressing the bare couplings g1 a1 |c><a| + g2 a2 |b><a| + h.c. yields,
    // besides the static part, pieces rotating at -u, +u, +2u, -2u.
    SpMat drive_diff = SpMat((std::sqrt(2.0) / (2.0 * u)) *
                             (p.omega2 * p.g1 * ops.a1 - p.omega1 * p.g2 * ops.a2));
    SpMat drive_sum =
        SpMat((1.0 / (2.0 * u)) * (p.omega1 * p.g1 * ops.a1 + p.omega2 * p.g2 * ops.a2));

    auto add_piece = [&h](double freq, const SpMat& op) {
        InteractionHamiltonian::Piece pc;
        pc.freq = freq;
        pc.op = op;
        pc.op_dag = SpMat(op.adjoint());
        h.pieces.push_back(std::move(pc));
    };
    add_piece(-u, SpMat(drive_diff * ops.sigma_dressed(DressedLevel::A, DressedLevel::B)));
    add_piece(+u, SpMat(-1.0 * drive_diff * ops.sigma_dressed(DressedLevel::A, DressedLevel::C)));
    add_piece(+2.0 * u, SpMat(-1.0 * drive_sum * ops.sigma_dressed(DressedLevel::B, DressedLevel::C)));
    add_piece(-2.0 * u, SpMat(drive_sum * ops.sigma_dressed(DressedLevel::C, DressedLevel::B)));
    return h;
}

SpMat InteractionHamiltonian::assemble(double t) const {
    SpMat out = static_part;
    for (const auto& pc : pieces) {
        const cplx ph = std::polar(1.0, pc.freq * t);
        out = out + SpMat(ph * pc.op) + SpMat(std::conj(ph) * pc.op_dag);
    }
    return out;
}

void InteractionHamiltonian::apply(double t, const Eigen::VectorXcd& in,
                                   Eigen::VectorXcd& out) const {
    out.noalias() = static_part * in;
    for (const auto& pc : pieces) {
        const cplx ph = std::polar(1.0, pc.freq * t);
        out.noalias() += ph * (pc.op * in);
        out.noalias() += std::conj(ph) * (pc.op_dag * in);
    }
}

void InteractionHamiltonian::apply_left_into(double t, const Eigen::MatrixXcd& x,
                                             Eigen::MatrixXcd& out) const {
    out.noalias() = static_part * x;
    for (const auto& pc : pieces) {
        const cplx ph = std::polar(1.0, pc.freq * t);
        out.noalias() += ph * (pc.op * x);
        out.noalias() += std::conj(ph) * (pc.op_dag * x);
    }
}

Eigen::MatrixXcd InteractionHamiltonian::apply_left(double t, const Eigen::MatrixXcd& x) const {
    Eigen::MatrixXcd out(x.rows(), x.cols());
    apply_left_into(t, x, out);
    return out;
}

void InteractionHamiltonian::apply_right_into(double t, const Eigen::MatrixXcd& x,
                                              Eigen::MatrixXcd& out) const {
    out.noalias() = x * static_part;
    for (const auto& pc : pieces) {
        const cplx ph = std::polar(1.0, pc.freq * t);
        out.noalias() += ph * (x * pc.op);
        out.noalias() += std::conj(ph) * (x * pc.op_dag);
    }
}

double InteractionHamiltonian::norm_bound() const {
    double b = sparse_inf_norm(static_part);
    for (const auto& pc : pieces)
        b += sparse_inf_norm(pc.op) + sparse_inf_norm(pc.op_dag);
    return b;
}

SpMat build_h_interaction_matrix(const ModelParams& p, const OperatorSet& ops, double t) {
    return build_h_interaction(p, ops).assemble(t);
}

SimState SimState::pure(Eigen::VectorXcd v, const TruncationSpec& s) {
    if (v.size() != s.total_dim() && v.size() != s.field_dim())
        throw validation_error("SimState: vector length does not match the truncation");
    SimState st;
    st.kind = Kind::vector;
    st.psi = std::move(v);
    st.trunc = s;
    return st;
}

SimState SimState::mixed(Eigen::MatrixXcd m, const TruncationSpec& s) {
    if (m.rows() != m.cols() || (m.rows() != s.total_dim() && m.rows() != s.field_dim()))
        throw validation_error("SimState: matrix shape does not match the truncation");
    SimState st;
    st.kind = Kind::density;
    st.rho = std::move(m);
    st.trunc = s;
    return st;
}

Eigen::VectorXcd coherent_vector(cplx amplitude, int dim) {
    if (dim < 2)
        throw validation_error("coherent_vector: need at least two Fock levels");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    if (amplitude == cplx(0.0, 0.0)) {
        v(0) = 1.0;
        return v;
    }
    const double a2 = std::norm(amplitude);
    const double la = std::log(std::abs(amplitude));
    const double th = std::arg(amplitude);
    double captured = 0.0;
    for (int n = 0; n < dim; ++n) {
        // log magnitude: -|a|^2/2 + n ln|a| - (1/2) ln n!
        const double lm = -0.5 * a2 + n * la - 0.5 * std::lgamma((double)n + 1.0);
        v(n) = std::polar(std::exp(lm), n * th);
        captured += std::exp(2.0 * lm);
    }
    if (1.0 - captured > 1e-8)
        throw truncation_error("coherent_vector: discarded tail mass exceeds 1e-8");
    v /= std::sqrt(captured);
    return v;
}

Eigen::VectorXcd field_vector(const CoherentPair& pair, const TruncationSpec& spec) {
    return kron_vec(coherent_vector(pair.alpha, spec.dim1), coherent_vector(pair.beta, spec.dim2));
}

Eigen::VectorXcd atom_field_vector(const Eigen::Vector3cd& atom_coeffs,
                                   const Eigen::VectorXcd& field, const TruncationSpec& spec) {
    if (field.size() != spec.field_dim())
        throw validation_error("atom_field_vector: field length does not match the truncation");
    Eigen::VectorXcd out(spec.total_dim());
    for (int x = 0; x < 3; ++x)
        out.segment(x * spec.field_dim(), spec.field_dim()) = atom_coeffs(x) * field;
    return out;
}

Eigen::VectorXcd initial_atom_vacuum(const TruncationSpec& spec) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(spec.total_dim());
    v(spec.index(static_cast<int>(AtomLevel::a), 0, 0)) = 1.0;
    return v;
}

Eigen::VectorXcd realize_ideal_state(const ModelParams& p, double t, const TruncationSpec& spec) {
    const DressedFrame f = dressed_frame(p);
    const CoherentPair pair = coherent_amplitudes(p, t);
    const CoherentPair flip{-pair.alpha, -pair.beta};
    const Eigen::VectorXcd plus = field_vector(pair, spec);
    const Eigen::VectorXcd minus = field_vector(flip, spec);
    const Eigen::Vector3cd vb = f.dressed_ket(DressedLevel::B).cast<cplx>();
    const Eigen::Vector3cd vc = f.dressed_ket(DressedLevel::C).cast<cplx>();
    return (atom_field_vector(vb, plus, spec) - atom_field_vector(vc, minus, spec)) /
           std::sqrt(2.0);
}

Eigen::VectorXcd realize_projected_pure(const ProjectedPureECS& s, const TruncationSpec& spec) {
    if (!(s.norm > 0.0))
        throw degenerate_state_error("realize_projected_pure: branch norm vanishes");
    const CoherentPair flip{-s.pair.alpha, -s.pair.beta};
    const double sg = s.sign == BranchSign::plus ? 1.0 : -1.0;
    return (std::polar(1.0, -s.phase) * field_vector(s.pair, spec) +
            sg * std::polar(1.0, s.phase) * field_vector(flip, spec)) /
           std::sqrt(s.norm);
}

Eigen::MatrixXcd realize_projected_mixed(const LossyFieldState& s, const TruncationSpec& spec) {
    const CoherentPair flip{-s.pair.alpha, -s.pair.beta};
    const Eigen::VectorXcd vp = field_vector(s.pair, spec);
    const Eigen::VectorXcd vm = field_vector(flip, spec);
    const cplx qp = std::exp(s.log_q) * std::polar(1.0, -2.0 * s.phase);
    return (vp * vp.adjoint() + vm * vm.adjoint() + qp * (vp * vm.adjoint()) +
            std::conj(qp) * (vm * vp.adjoint())) /
           s.s_norm;
}

Eigen::MatrixXcd realize_dressed_density(const DressedBranchDensity& d, const DressedFrame& frame,
                                         const TruncationSpec& spec) {
    const CoherentPair flip{-d.pair.alpha, -d.pair.beta};
    const Eigen::VectorXcd vb = atom_field_vector(
        frame.dressed_ket(DressedLevel::B).cast<cplx>(), field_vector(d.pair, spec), spec);
    const Eigen::VectorXcd vc = atom_field_vector(
        frame.dressed_ket(DressedLevel::C).cast<cplx>(), field_vector(flip, spec), spec);
    const cplx qp = d.q * std::polar(1.0, -2.0 * d.phase);
    return 0.5 * (vb * vb.adjoint() + vc * vc.adjoint() - qp * (vb * vc.adjoint()) -
                  std::conj(qp) * (vc * vb.adjoint()));
}

namespace {

struct UnitaryMonitors {
    double max_drift = 0.0;
    double tail = 0.0;
    double local_error = 0.0;
    bool ok = true;
    int steps_since_probe = 0;
};

struct UnitaryScratch {
    Eigen::VectorXcd k1, k2, k3, k4, tmp, hv, y0, yfull;
    explicit UnitaryScratch(Eigen::Index d)
        : k1(d), k2(d), k3(d), k4(d), tmp(d), hv(d), y0(d), yfull(d) {}
};

void rk4_step_vec(const InteractionHamiltonian& h, Eigen::VectorXcd& y, double t, double dt,
                  UnitaryScratch& w) {
    h.apply(t, y, w.hv);
    w.k1 = -iu * w.hv;
    w.tmp = y + 0.5 * dt * w.k1;
    h.apply(t + 0.5 * dt, w.tmp, w.hv);
    w.k2 = -iu * w.hv;
    w.tmp = y + 0.5 * dt * w.k2;
    h.apply(t + 0.5 * dt, w.tmp, w.hv);
    w.k3 = -iu * w.hv;
    w.tmp = y + dt * w.k3;
    h.apply(t + dt, w.tmp, w.hv);
    w.k4 = -iu * w.hv;
    y += (dt / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
}

void rk4_unitary_segment(const InteractionHamiltonian& h, Eigen::VectorXcd& y, double t0,
                         double span, const EvolveOptions& opt, const Eigen::VectorXd& mask,
                         UnitaryMonitors& mon, UnitaryScratch& w) {
    const int n = substeps(span, opt.dt);
    if (n == 0)
        return;
    const double dt = span / n;
    for (int i = 0; i < n; ++i) {
        const double t = t0 + i * dt;
        const bool probe =
            opt.error_sample_interval > 0 && ++mon.steps_since_probe >= opt.error_sample_interval;
        if (probe) {
            mon.steps_since_probe = 0;
            w.y0 = y;
            rk4_step_vec(h, y, t, dt, w);
            w.yfull.swap(y);
            y = w.y0;
            rk4_step_vec(h, y, t, 0.5 * dt, w);
            rk4_step_vec(h, y, t + 0.5 * dt, 0.5 * dt, w);
            mon.local_error = std::max(mon.local_error, (w.yfull - y).norm() / 15.0);
        } else {
            rk4_step_vec(h, y, t, dt, w);
        }

        const double nr = y.norm();
        mon.max_drift = std::max(mon.max_drift, std::abs(nr - 1.0));
        if (opt.renormalize && nr > 0.0)
            y /= nr;
        const double tail = mask.dot(y.cwiseAbs2());
        mon.tail = std::max(mon.tail, tail);
        if (tail > opt.tail_threshold)
            mon.ok = false;
    }
}

} // namespace

std::vector<SimState> evolve_schrodinger_path(const InteractionHamiltonian& h,
                                              const Eigen::VectorXcd& psi0,
                                              const TruncationSpec& spec,
                                              const std::vector<double>& times,
                                              const EvolveOptions& opt) {
    check_times(times);
    check_dt(opt, h, 0.0);
    if (psi0.size() != spec.total_dim())
        throw validation_error("evolve_schrodinger: state length does not match the truncation");

    const Eigen::VectorXd mask = tail_mask(spec, psi0.size());
    Eigen::VectorXcd y = psi0;
    UnitaryMonitors mon;
    UnitaryScratch scratch(y.size());
    std::vector<SimState> out;
    out.reserve(times.size());
    double t_cur = 0.0;
    for (double t : times) {
        rk4_unitary_segment(h, y, t_cur, t - t_cur, opt, mask, mon, scratch);
        t_cur = t;
        SimState s = SimState::pure(y, spec);
        s.max_norm_drift = mon.max_drift;
        s.tail_population = mon.tail;
        s.truncation_ok = mon.ok;
        s.max_local_error = mon.local_error;
        out.push_back(std::move(s));
    }
    return out;
}

SimState evolve_schrodinger(const InteractionHamiltonian& h, const Eigen::VectorXcd& psi0,
                            const TruncationSpec& spec, double t, const EvolveOptions& opt) {
    return evolve_schrodinger_path(h, psi0, spec, {t}, opt).back();
}

SimState evolve_schrodinger(const SpMat& h, const Eigen::VectorXcd& psi0,
                            const TruncationSpec& spec, double t, const EvolveOptions& opt) {
    InteractionHamiltonian ih;
    ih.static_part = h;
    ih.dim = (int)h.rows();
    return evolve_schrodinger(ih, psi0, spec, t, opt);
}

namespace {

struct LindbladWork {
    std::vector<SpMat> jump_dag;
    InteractionHamiltonian k_dag; // H(t) + i sum_j r_j L_j^+ L_j
    Eigen::MatrixXcd a, b, c;     // step scratch, sized once per run
};

// For Hermitian rho the coherent and damping terms collapse into
// i (C - C+) with C = rho K+, K = H - i sum r L+L, so the hot loop is one
// sparse right-product per stage: left products scatter over matrix rows
// and run an order of magnitude slower at this size. The explicit
// antisymmetrisation also keeps the output exactly Hermitian in floats.
void lindblad_rhs_into(const LindbladSystem& sys, LindbladWork& work, double t,
                       const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    work.k_dag.apply_right_into(t, rho, work.a);
    out.noalias() = cplx(0.0, 1.0) * work.a;
    out.noalias() -= cplx(0.0, 1.0) * work.a.adjoint();
    for (size_t j = 0; j < sys.jumps.size(); ++j) {
        const double r = sys.rates[j];
        if (r == 0.0)
            continue;
        work.b.noalias() = rho * work.jump_dag[j];
        work.c.noalias() = sys.jumps[j] * work.b;
        out.noalias() += (2.0 * r) * work.c;
    }
}

} // namespace

std::vector<SimState> lindblad_evolve_path(const LindbladSystem& sys, const Eigen::MatrixXcd& rho0,
                                           const TruncationSpec& spec,
                                           const std::vector<double>& times,
                                           const EvolveOptions& opt) {
    check_times(times);
    if (sys.jumps.size() != sys.rates.size())
        throw validation_error("lindblad_evolve: jumps and rates disagree");
    for (double r : sys.rates)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw validation_error("lindblad_evolve: rates must be finite and >= 0");
    if (rho0.rows() != rho0.cols() || rho0.rows() != sys.h.static_part.rows())
        throw validation_error("lindblad_evolve: density shape does not match the Hamiltonian");

    LindbladWork work;
    work.k_dag = sys.h;
    double rate_bound = 0.0;
    for (size_t j = 0; j < sys.jumps.size(); ++j) {
        work.jump_dag.push_back(SpMat(sys.jumps[j].adjoint()));
        const SpMat number(work.jump_dag[j] * sys.jumps[j]);
        rate_bound += 4.0 * sys.rates[j] * sparse_inf_norm(number);
        if (sys.rates[j] != 0.0)
            work.k_dag.static_part += cplx(0.0, sys.rates[j]) * number;
    }
    check_dt(opt, sys.h, rate_bound);

    const Eigen::VectorXd mask = tail_mask(spec, rho0.rows());
    Eigen::MatrixXcd y = rho0;
    double max_drift = 0.0, tail_max = 0.0;
    bool ok = true;

    const Eigen::Index d = rho0.rows();
    work.a.resize(d, d);
    work.b.resize(d, d);
    work.c.resize(d, d);
    Eigen::MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), ytmp(d, d);
    Eigen::MatrixXcd y0(d, d), yfull(d, d);

    auto rk4_step = [&](double t, double dt) {
        lindblad_rhs_into(sys, work, t, y, k1);
        ytmp = y + (0.5 * dt) * k1;
        lindblad_rhs_into(sys, work, t + 0.5 * dt, ytmp, k2);
        ytmp = y + (0.5 * dt) * k2;
        lindblad_rhs_into(sys, work, t + 0.5 * dt, ytmp, k3);
        ytmp = y + dt * k3;
        lindblad_rhs_into(sys, work, t + dt, ytmp, k4);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    auto scrub = [&] { // restore exact hermiticity lost to roundoff
        work.a = y.adjoint();
        y += work.a;
        y *= 0.5;
    };

    double local_err = 0.0;
    std::vector<SimState> out;
    out.reserve(times.size());
    double t_cur = 0.0;
    int steps_since_scrub = 0, steps_since_probe = 0;
    for (double t_target : times) {
        const int n = substeps(t_target - t_cur, opt.dt);
        const double dt = n > 0 ? (t_target - t_cur) / n : 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = t_cur + i * dt;
            const bool probe = opt.error_sample_interval > 0 &&
                               ++steps_since_probe >= opt.error_sample_interval;
            if (probe) {
                steps_since_probe = 0;
                y0 = y;
                rk4_step(t, dt);
                yfull.swap(y);
                y = y0;
                rk4_step(t, 0.5 * dt);
                rk4_step(t + 0.5 * dt, 0.5 * dt);
                local_err = std::max(local_err, (yfull - y).norm() / 15.0);
            } else {
                rk4_step(t, dt);
            }
            if (++steps_since_scrub >= 32) {
                steps_since_scrub = 0;
                scrub();
            }

            const cplx tr = y.trace();
            max_drift = std::max(max_drift, std::abs(tr - cplx(1.0, 0.0)));
            const double tail = mask.dot(y.diagonal().real());
            tail_max = std::max(tail_max, tail);
            if (tail > opt.tail_threshold)
                ok = false;
        }
        t_cur = t_target;
        if (steps_since_scrub > 0) {
            steps_since_scrub = 0;
            scrub();
        }
        SimState s = SimState::mixed(y, spec);
        s.max_norm_drift = max_drift;
        s.tail_population = tail_max;
        s.truncation_ok = ok;
        s.max_local_error = local_err;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SimState> evolve_lindblad_path(const ModelParams& p, const TruncationSpec& spec,
                                           const std::vector<double>& times, double dt,
                                           CoherentPart part,
                                           const std::optional<Eigen::MatrixXcd>& rho0) {
    const OperatorSet ops = build_operators(spec, dressed_frame(p));
    LindbladSystem sys;
    if (part == CoherentPart::interaction) {
        sys.h = build_h_interaction(p, ops);
    } else {
        sys.h.static_part = build_h_eff(p, ops);
        sys.h.dim = spec.total_dim();
    }
    sys.jumps = {ops.a1, ops.a2};
    sys.rates = {p.kappa, p.kappa};

    Eigen::MatrixXcd start;
    if (rho0) {
        start = *rho0;
    } else {
        const Eigen::VectorXcd v = initial_atom_vacuum(spec);
        start = v * v.adjoint();
    }
    EvolveOptions opt;
    opt.dt = dt;
    return lindblad_evolve_path(sys, start, spec, times, opt);
}

SimState evolve_lindblad(const ModelParams& p, const TruncationSpec& spec, double t, double dt,
                         CoherentPart part, const std::optional<Eigen::MatrixXcd>& rho0) {
    return evolve_lindblad_path(p, spec, {t}, dt, part, rho0).back();
}

SimState to_lab_frame(const SimState& s, const ModelParams& p, double t) {
    const DressedFrame f = dressed_frame(p);
    // e^{-i H0 t} = |A><A| + e^{-iut} |B><B| + e^{+iut} |C><C|
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    const Eigen::Vector3d va = f.dressed_ket(DressedLevel::A);
    const Eigen::Vector3d vb = f.dressed_ket(DressedLevel::B);
    const Eigen::Vector3d vc = f.dressed_ket(DressedLevel::C);
    g += (va * va.transpose()).cast<cplx>();
    g += std::polar(1.0, -f.u * t) * (vb * vb.transpose()).cast<cplx>();
    g += std::polar(1.0, +f.u * t) * (vc * vc.transpose()).cast<cplx>();

    const int fd = s.trunc.field_dim();
    SimState out = s;
    if (s.kind == SimState::Kind::vector) {
        if (s.psi.size() != s.trunc.total_dim())
            throw validation_error("to_lab_frame: expected a full atom-field state");
        out.psi = Eigen::VectorXcd::Zero(s.psi.size());
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                if (g(x, y) != cplx(0.0, 0.0))
                    out.psi.segment(x * fd, fd) += g(x, y) * s.psi.segment(y * fd, fd);
    } else {
        if (s.rho.rows() != s.trunc.total_dim())
            throw validation_error("to_lab_frame: expected a full atom-field state");
        out.rho = Eigen::MatrixXcd::Zero(s.rho.rows(), s.rho.cols());
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y)
                for (int xx = 0; xx < 3; ++xx)
                    for (int yy = 0; yy < 3; ++yy) {
                        const cplx w = g(x, xx) * std::conj(g(y, yy));
                        if (w != cplx(0.0, 0.0))
                            out.rho.block(x * fd, y * fd, fd, fd) +=
                                w * s.rho.block(xx * fd, yy * fd, fd, fd);
                    }
    }
    return out;
}

ProjectionResult project_atom(const SimState& s, AtomLevel outcome) {
    const int fd = s.trunc.field_dim();
    const int x = static_cast<int>(outcome);
    ProjectionResult res;
    if (s.kind == SimState::Kind::vector) {
        if (s.psi.size() != s.trunc.total_dim())
            throw validation_error("project_atom: expected a full atom-field state");
        Eigen::VectorXcd block = s.psi.segment(x * fd, fd);
        const double p = block.squaredNorm();
        if (p < 1e-14)
            throw zero_probability_error("project_atom: outcome probability below 1e-14");
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(s.psi.size());
        out.segment(x * fd, fd) = block / std::sqrt(p);
        res.state = SimState::pure(std::move(out), s.trunc);
        res.probability = p;
    } else {
        if (s.rho.rows() != s.trunc.total_dim())
            throw validation_error("project_atom: expected a full atom-field state");
        Eigen::MatrixXcd block = s.rho.block(x * fd, x * fd, fd, fd);
        const double p = block.trace().real();
        if (p < 1e-14)
            throw zero_probability_error("project_atom: outcome probability below 1e-14");
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(s.rho.rows(), s.rho.cols());
        out.block(x * fd, x * fd, fd, fd) = block / p;
        res.state = SimState::mixed(std::move(out), s.trunc);
        res.probability = p;
    }
    res.state.tail_population = s.tail_population;
    res.state.truncation_ok = s.truncation_ok;
    res.state.max_norm_drift = s.max_norm_drift;
    return res;
}

Eigen::MatrixXcd partial_trace_atom(const SimState& s) {
    const int fd = s.trunc.field_dim();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(fd, fd);
    if (s.kind == SimState::Kind::vector) {
        if (s.psi.size() != s.trunc.total_dim())
            throw validation_error("partial_trace_atom: expected a full atom-field state");
        for (int x = 0; x < 3; ++x) {
            const Eigen::VectorXcd block = s.psi.segment(x * fd, fd);
            out.noalias() += block * block.adjoint();
        }
    } else {
        if (s.rho.rows() != s.trunc.total_dim())
            throw validation_error("partial_trace_atom: expected a full atom-field state");
        for (int x = 0; x < 3; ++x)
            out += s.rho.block(x * fd, x * fd, fd, fd);
    }
    return out;
}

namespace {

double half_trace_norm(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Eigen::MatrixXcd as_density(const SimState& s) {
    if (s.kind == SimState::Kind::density)
        return s.rho;
    return s.psi * s.psi.adjoint();
}

} // namespace

StateMetrics state_metrics(const SimState& x, const SimState& y) {
    const Eigen::Index dx = x.kind == SimState::Kind::vector ? x.psi.size() : x.rho.rows();
    const Eigen::Index dy = y.kind == SimState::Kind::vector ? y.psi.size() : y.rho.rows();
    if (dx != dy)
        throw validation_error("state_metrics: dimension mismatch");

    StateMetrics m;
    if (x.kind == SimState::Kind::vector && y.kind == SimState::Kind::vector) {
        const double f = std::norm(x.psi.dot(y.psi));
        m.fidelity = std::min(1.0, f);
        m.trace_distance = std::sqrt(std::max(0.0, 1.0 - f));
        return m;
    }
    if (x.kind == SimState::Kind::vector || y.kind == SimState::Kind::vector) {
        const SimState& v = x.kind == SimState::Kind::vector ? x : y;
        const SimState& d = x.kind == SimState::Kind::vector ? y : x;
        m.fidelity = std::max(0.0, std::real(v.psi.dot(d.rho * v.psi)));
        m.trace_distance = half_trace_norm(d.rho - v.psi * v.psi.adjoint());
        return m;
    }
    const Eigen::MatrixXcd ra = as_density(x);
    const Eigen::MatrixXcd rb = as_density(y);
    const Eigen::MatrixXcd sa = dense_sqrt_psd(ra);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sa * rb * sa, Eigen::EigenvaluesOnly);
    const double root_sum = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    m.fidelity = std::min(1.0, root_sum * root_sum);
    m.trace_distance = half_trace_norm(ra - rb);
    return m;
}

OracleConcurrence oracle_concurrence(const Eigen::MatrixXcd& field_rho, cplx alpha, cplx beta,
                                     const TruncationSpec& spec) {
    if (field_rho.rows() != spec.field_dim() || field_rho.cols() != spec.field_dim())
        throw validation_error("oracle_concurrence: expected a field-space density");

    // Per-mode bases {|l>, orthogonalized |-l>} from the truncated vectors.
    auto mode_basis = [](cplx label, int dim) {
        const Eigen::VectorXcd v0 = coherent_vector(label, dim);
        const Eigen::VectorXcd v1 = coherent_vector(-label, dim);
        Eigen::VectorXcd w = v1 - v0 * v0.dot(v1);
        const double n = w.norm();
        if (n < 1e-8)
            throw degenerate_mode_error("oracle_concurrence: branch labels coincide");
        return std::make_pair(v0, Eigen::VectorXcd(w / n));
    };
    const auto [e0, e1] = mode_basis(alpha, spec.dim1);
    const auto [f0, f1] = mode_basis(beta, spec.dim2);

    Eigen::MatrixXcd basis(spec.field_dim(), 4);
    basis.col(0) = kron_vec(e0, f0);
    basis.col(1) = kron_vec(e0, f1);
    basis.col(2) = kron_vec(e1, f0);
    basis.col(3) = kron_vec(e1, f1);

    Eigen::Matrix4cd block = basis.adjoint() * field_rho * basis;
    const double captured = block.trace().real();
    OracleConcurrence out;
    out.leakage = std::max(0.0, field_rho.trace().real() - captured);
    out.subspace_warning = out.leakage > 0.05;
    if (!(captured > 1e-14))
        throw zero_probability_error("oracle_concurrence: no weight in the coherent subspace");

    TwoQubitDensity td;
    td.rho = block / captured;
    td.rho = 0.5 * (td.rho + td.rho.adjoint().eval());
    out.concurrence = wootters_concurrence(td);
    return out;
}

} // namespace ecsgen
