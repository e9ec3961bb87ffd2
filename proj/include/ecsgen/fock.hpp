#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ecsgen/lossless.hpp"
#include "ecsgen/lossy.hpp"
#include "ecsgen/model.hpp"

namespace ecsgen {

using SpMat = Eigen::SparseMatrix<cplx>;

// Truncated Fock cutoffs per mode. Basis ordering is atom x mode1 x mode2,
// row-major: index = (atom * dim1 + n1) * dim2 + n2.
struct TruncationSpec {
    int dim1 = 0;
    int dim2 = 0;

    TruncationSpec() = default;
    TruncationSpec(int d1, int d2);

    int field_dim() const { return dim1 * dim2; }
    int total_dim() const { return 3 * dim1 * dim2; }
    int index(int atom, int n1, int n2) const { return (atom * dim1 + n1) * dim2 + n2; }
};

// Embedded operators on the full atom x field space.
struct OperatorSet {
    TruncationSpec spec;
    DressedFrame frame;
    SpMat a1, a2; // annihilation operators
    SpMat n1, n2; // number operators

    SpMat embed_atom(const Eigen::Matrix3cd& op) const; // op x I x I
    SpMat sigma_bare(AtomLevel x, AtomLevel y) const;   // |x><y| x I x I
    SpMat sigma_dressed(DressedLevel x, DressedLevel y) const;
};

OperatorSet build_operators(const TruncationSpec& spec, const DressedFrame& frame);

// Secular Hamiltonian in the dressed co-rotating frame:
//   H_eff = (1/2u) [omega1 g1 (a1 + a1+) + omega2 g2 (a2 + a2+)] (|B><B| - |C><C|).
SpMat build_h_eff(const ModelParams& p, const OperatorSet& ops);

// Full co-rotating coupling H(t) = static + sum_k (e^{i f_k t} X_k + h.c.);
// the static part is H_eff, the pieces oscillate at +-u and +-2u.
struct InteractionHamiltonian {
    SpMat static_part;
    struct Piece {
        double freq = 0.0;
        SpMat op, op_dag;
    };
    std::vector<Piece> pieces;
    double max_frequency = 0.0;
    int dim = 0;

    SpMat assemble(double t) const;
    void apply(double t, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const;
    Eigen::MatrixXcd apply_left(double t, const Eigen::MatrixXcd& x) const; // H(t) x
    // As apply_left, writing into a preallocated out of x's shape.
    void apply_left_into(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;
    // out = x H(t), same preallocation contract.
    void apply_right_into(double t, const Eigen::MatrixXcd& x, Eigen::MatrixXcd& out) const;
    double norm_bound() const; // cheap upper estimate for step-size checks
};

InteractionHamiltonian build_h_interaction(const ModelParams& p, const OperatorSet& ops);
SpMat build_h_interaction_matrix(const ModelParams& p, const OperatorSet& ops, double t);

// Simulation state: a ket or a density matrix on the truncated space, with
// integrator health monitors attached.
struct SimState {
    enum class Kind { vector, density };
    Kind kind = Kind::vector;
    Eigen::VectorXcd psi;
    Eigen::MatrixXcd rho;
    TruncationSpec trunc;
    double tail_population = 0.0; // max population seen in the top two levels
    bool truncation_ok = true;    // false once tail exceeded the threshold
    double max_norm_drift = 0.0;  // |norm - 1| (kets) or |trace - 1| (densities)
    double max_local_error = 0.0; // largest sampled step-doubling error estimate

    static SimState pure(Eigen::VectorXcd v, const TruncationSpec& s);
    static SimState mixed(Eigen::MatrixXcd m, const TruncationSpec& s);
    bool is_density() const { return kind == Kind::density; }
};

// Normalized truncated coherent state; throws truncation_error when the
// discarded tail mass exceeds 1e-8.
Eigen::VectorXcd coherent_vector(cplx amplitude, int dim);

// |amp1> x |amp2> on the field space.
Eigen::VectorXcd field_vector(const CoherentPair& pair, const TruncationSpec& spec);

// atom_coeffs x field on the full space.
Eigen::VectorXcd atom_field_vector(const Eigen::Vector3cd& atom_coeffs,
                                   const Eigen::VectorXcd& field, const TruncationSpec& spec);

// |a, 0, 0>.
Eigen::VectorXcd initial_atom_vacuum(const TruncationSpec& spec);

// (1/sqrt2)(|B, alpha, beta> - |C, -alpha, -beta>) in the co-rotating frame.
Eigen::VectorXcd realize_ideal_state(const ModelParams& p, double t, const TruncationSpec& spec);

// Field-space realizations of the analytic post-detection states.
Eigen::VectorXcd realize_projected_pure(const ProjectedPureECS& s, const TruncationSpec& spec);
Eigen::MatrixXcd realize_projected_mixed(const LossyFieldState& s, const TruncationSpec& spec);

// Full atom-field density of the dissipative solution (phase as stored).
Eigen::MatrixXcd realize_dressed_density(const DressedBranchDensity& d, const DressedFrame& frame,
                                         const TruncationSpec& spec);

struct EvolveOptions {
    double dt = 0.0;
    double tail_threshold = 1e-6;
    bool renormalize = true; // unitary runs: project back to unit norm each step
    // Every this many steps the step is redone as two half steps and the
    // Richardson difference /15 is recorded as a local error probe; the more
    // accurate half-step result is kept. 0 disables sampling.
    int error_sample_interval = 32;
};

// Fixed-step RK4 for i psi' = H psi. Keeps a norm-drift monitor; requires
// dt * |H| <= 0.05 and, for oscillating H, dt <= 0.04 / max_frequency.
SimState evolve_schrodinger(const SpMat& h, const Eigen::VectorXcd& psi0,
                            const TruncationSpec& spec, double t, const EvolveOptions& opt);
SimState evolve_schrodinger(const InteractionHamiltonian& h, const Eigen::VectorXcd& psi0,
                            const TruncationSpec& spec, double t, const EvolveOptions& opt);
std::vector<SimState> evolve_schrodinger_path(const InteractionHamiltonian& h,
                                              const Eigen::VectorXcd& psi0,
                                              const TruncationSpec& spec,
                                              const std::vector<double>& times,
                                              const EvolveOptions& opt);

// Generic Lindblad master equation with jump operators L_j and rates r_j:
// rho' = -i[H, rho] + sum_j r_j (2 L_j rho L_j+ - L_j+L_j rho - rho L_j+L_j).
struct LindbladSystem {
    InteractionHamiltonian h;
    std::vector<SpMat> jumps;
    std::vector<double> rates;
};

std::vector<SimState> lindblad_evolve_path(const LindbladSystem& sys, const Eigen::MatrixXcd& rho0,
                                           const TruncationSpec& spec,
                                           const std::vector<double>& times,
                                           const EvolveOptions& opt);

enum class CoherentPart { effective, interaction };

// Model-level wrapper: coherent part H_eff (default) or the full oscillating
// coupling, jumps sqrt-free a1, a2 at rate kappa, initial state |a,0,0> unless
// a custom density is supplied.
SimState evolve_lindblad(const ModelParams& p, const TruncationSpec& spec, double t, double dt,
                         CoherentPart part = CoherentPart::effective,
                         const std::optional<Eigen::MatrixXcd>& rho0 = {});
std::vector<SimState> evolve_lindblad_path(const ModelParams& p, const TruncationSpec& spec,
                                           const std::vector<double>& times, double dt,
                                           CoherentPart part = CoherentPart::effective,
                                           const std::optional<Eigen::MatrixXcd>& rho0 = {});

// Undo the dressed co-rotating frame: apply e^{-i H0 t} (atomic rotation only).
SimState to_lab_frame(const SimState& s, const ModelParams& p, double t);

struct ProjectionResult {
    SimState state;
    double probability = 0.0;
};

// Projective measurement of a bare atomic level. Throws
// zero_probability_error below 1e-14 outcome probability.
ProjectionResult project_atom(const SimState& s, AtomLevel outcome);

// Trace out the atom, returning a field-space density.
Eigen::MatrixXcd partial_trace_atom(const SimState& s);

struct StateMetrics {
    double fidelity = 0.0;       // Uhlmann, |<x|y>|^2 for pure pairs
    double trace_distance = 0.0; // (1/2) ||x - y||_1
};

StateMetrics state_metrics(const SimState& x, const SimState& y);

struct OracleConcurrence {
    double concurrence = 0.0;
    double leakage = 0.0; // probability outside span{|+-alpha>} x span{|+-beta>}
    bool subspace_warning = false; // leakage > 0.05
};

// Wootters concurrence of a field density compressed onto the two-branch
// coherent subspace around (alpha, beta).
OracleConcurrence oracle_concurrence(const Eigen::MatrixXcd& field_rho, cplx alpha, cplx beta,
                                     const TruncationSpec& spec);

} // namespace ecsgen
