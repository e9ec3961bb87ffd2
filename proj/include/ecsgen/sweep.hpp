#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecsgen/fock.hpp"
#include "ecsgen/lossy.hpp"
#include "ecsgen/model.hpp"

namespace ecsgen {

inline constexpr const char* tool_name = "ecsgen";
inline constexpr const char* tool_version = "1.0.0";

enum class SweepMode { lossless, lossy, oracle_compare };

// cos(2ut) aliases badly on uniform grids (period pi/u), so a sweep can snap
// its samples to the lattice where cos(2ut) = +1 (t = k pi/u) or -1
// (t = (2k+1) pi/2u), tracing one envelope of the oscillation instead.
enum class EnvelopeLattice { none, plus, minus };

// Name round-trips for config files and CLI flags; *_from_name throws
// validation_error on unknown names.
std::string sign_to_name(BranchSign s);
BranchSign sign_from_name(const std::string& name);
std::string envelope_to_name(EnvelopeLattice e);
EnvelopeLattice envelope_from_name(const std::string& name);

struct SweepConfig {
    ModelParams params;
    double t_min = 0.0;
    double t_max = 100.0;
    int steps = 2000; // uniform intervals; rows = steps + 1
    SweepMode mode = SweepMode::lossless;
    EnvelopeLattice envelope = EnvelopeLattice::none;
    // Subset of {C, N, N1, N2, q, alpha, beta, norm, detection_probs};
    // empty means everything except the derived N.
    std::vector<std::string> outputs;
    std::optional<TruncationSpec> truncation; // oracle_compare only
    std::optional<double> dt;                 // oracle_compare only

    void validate() const; // throws validation_error
};

struct TimeSeriesRow {
    double t = 0.0;
    bool degenerate = false; // branch norm vanished; value cells left empty
    double C = 0.0;
    double N1 = 0.0;
    double N2 = 0.0;
    double q = 1.0;
    cplx alpha{0.0, 0.0};
    cplx beta{0.0, 0.0};
    double norm = 0.0; // branch normalization, M+- or S
    double P_a = 0.0, P_b = 0.0, P_c = 0.0;
    // oracle_compare extras (CSV gets the first three; the rest feed the report)
    double fidelity = 0.0;
    double trace_distance = 0.0;
    double leakage = 0.0;
    double C_oracle = 0.0;
    double q_oracle = 0.0;
    double N1_oracle = 0.0;
    double N2_oracle = 0.0;
};

// Sample grid: uniform over [t_min, t_max] with `steps` intervals, or the
// envelope lattice points falling inside the window.
std::vector<double> sweep_times(const SweepConfig& cfg);

// Closed-form rows (kappa = 0 or mode lossless: pure-branch formulas, honoring
// params.sign; lossy mode with kappa > 0: the a-detection mixed state). Mode
// oracle_compare integrates the truncated model alongside the formulas. Rows
// come back in t order; a degenerate point is flagged instead of aborting.
std::vector<TimeSeriesRow> run_sweep(const SweepConfig& cfg);

// CSV column list for a config: t, the selected output columns, oracle metric
// columns when comparing, then the degenerate flag.
std::vector<std::string> column_names(const SweepConfig& cfg);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// RFC 4180 (CRLF, header row) plus a sibling <stem>.meta.json recording the
// config and tool version. Throws io_error on failure.
void emit_csv(const std::vector<TimeSeriesRow>& rows, const SweepConfig& cfg,
              const std::string& path);

// Path of the metadata sibling for a CSV path.
std::string meta_path_for(const std::string& csv_path);

nlohmann::ordered_json config_to_json(const SweepConfig& cfg);
SweepConfig config_from_json(const nlohmann::ordered_json& j);

// Preconfigured sweeps behind the two reference figures.
SweepConfig fig2_config();
std::array<SweepConfig, 3> fig3_configs();

// Writes the preset CSVs (fig2: one file; fig3: one per kappa) into out_dir
// and returns the paths written.
std::vector<std::string> write_figure_data(const std::string& which,
                                           const std::string& out_dir);

// Oracle comparison: JSON report with per-t metrics, the worst discrepancies,
// and a pass flag against the declared tolerances.
struct CompareTolerances {
    double trace_distance = 0.05;
    double fidelity_min = 0.99;
    double concurrence = 1e-2;
    double leakage = 1e-3;
};

nlohmann::ordered_json compare_report(const SweepConfig& cfg,
                                      const CompareTolerances& tol = {});

// Serialize a JSON document to disk (trailing newline). Throws io_error.
void write_json(const nlohmann::ordered_json& doc, const std::string& path);

} // namespace ecsgen
