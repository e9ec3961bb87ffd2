#include "ecsgen/sweep.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace ecsgen {

namespace {

// Best effort: a missing directory should not cost the caller a finished run.
void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
}

const std::array<const char*, 9> all_outputs = {"C",    "N",    "N1",   "N2",             "q",
                                                "alpha", "beta", "norm", "detection_probs"};

bool known_output(const std::string& key) {
    return std::find(all_outputs.begin(), all_outputs.end(), key) != all_outputs.end();
}

// Selected outputs in canonical order (dedup; stable across configs).
std::vector<std::string> normalized_outputs(const SweepConfig& cfg) {
    if (cfg.outputs.empty())
        return {"C", "N1", "N2", "q", "alpha", "beta", "norm", "detection_probs"};
    std::vector<std::string> out;
    for (const char* key : all_outputs)
        if (std::find(cfg.outputs.begin(), cfg.outputs.end(), key) != cfg.outputs.end())
            out.emplace_back(key);
    return out;
}

std::string mode_name(SweepMode m) {
    switch (m) {
    case SweepMode::lossless: return "lossless";
    case SweepMode::lossy: return "lossy";
    case SweepMode::oracle_compare: return "oracle_compare";
    }
    return "lossless";
}

SweepMode mode_from(const std::string& name) {
    if (name == "lossless")
        return SweepMode::lossless;
    if (name == "lossy")
        return SweepMode::lossy;
    if (name == "oracle_compare")
        return SweepMode::oracle_compare;
    throw validation_error("unknown mode '" + name + "'");
}

TimeSeriesRow lossless_row(const ModelParams& p, double t) {
    TimeSeriesRow row;
    row.t = t;
    row.q = 1.0;
    const std::array<double, 3> probs = detection_probabilities(p, t);
    row.P_a = probs[0];
    row.P_b = probs[1];
    row.P_c = probs[2];
    try {
        const ProjectedPureECS s = projected_state(p, t);
        row.alpha = s.pair.alpha;
        row.beta = s.pair.beta;
        row.norm = s.norm;
        row.C = concurrence_lossless(s);
        const auto [n1, n2] = mean_photon_numbers(s);
        row.N1 = n1;
        row.N2 = n2;
    } catch (const degenerate_state_error&) {
        row.degenerate = true;
        const CoherentPair pair = coherent_amplitudes(p, t);
        row.alpha = pair.alpha;
        row.beta = pair.beta;
    }
    return row;
}

TimeSeriesRow lossy_row(const ModelParams& p, double t, double u) {
    TimeSeriesRow row;
    row.t = t;
    const LossyFieldState s = projected_mixed_state(p, t);
    row.alpha = s.pair.alpha;
    row.beta = s.pair.beta;
    row.q = std::exp(s.log_q);
    row.norm = s.s_norm;
    row.C = concurrence_lossy(s);
    const auto [n1, n2] = lossy_photon_numbers(s);
    row.N1 = n1;
    row.N2 = n2;
    // Atomic outcome probabilities: S/4 for |a>, the complement 4 - S split
    // between |b> and |c> by the drive weights (sums to 1).
    const double s_minus = 4.0 - s.s_norm;
    row.P_a = s.s_norm / 4.0;
    row.P_b = (p.omega2 / (2.0 * u)) * (p.omega2 / (2.0 * u)) * s_minus;
    row.P_c = (p.omega1 / (2.0 * u)) * (p.omega1 / (2.0 * u)) * s_minus;
    return row;
}

std::pair<double, double> field_mode_numbers(const Eigen::MatrixXcd& field_rho,
                                             const TruncationSpec& spec) {
    double n1 = 0.0, n2 = 0.0;
    for (int i = 0; i < spec.dim1; ++i)
        for (int j = 0; j < spec.dim2; ++j) {
            const double pop = field_rho(i * spec.dim2 + j, i * spec.dim2 + j).real();
            n1 += i * pop;
            n2 += j * pop;
        }
    return {n1, n2};
}

std::vector<TimeSeriesRow> oracle_rows(const SweepConfig& cfg, const std::vector<double>& times) {
    const ModelParams& p = cfg.params;
    const TruncationSpec trunc = *cfg.truncation;
    const DressedFrame frame = dressed_frame(p);
    EvolveOptions opt;
    opt.dt = *cfg.dt;

    std::vector<SimState> path;
    if (p.kappa == 0.0) {
        const OperatorSet ops = build_operators(trunc, frame);
        path = evolve_schrodinger_path(build_h_interaction(p, ops), initial_atom_vacuum(trunc),
                                       trunc, times, opt);
    } else {
        path = evolve_lindblad_path(p, trunc, times, *cfg.dt, CoherentPart::effective);
    }

    std::vector<TimeSeriesRow> rows;
    rows.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const SimState& state = path[i];
        if (!state.truncation_ok)
            throw truncation_error("oracle: population " + format_double(state.tail_population) +
                                   " reached the top Fock levels by t = " + format_double(t) +
                                   " at dims " + std::to_string(trunc.dim1) + "x" +
                                   std::to_string(trunc.dim2) + "; raise the truncation");

        TimeSeriesRow row = p.kappa == 0.0 ? lossless_row(p, t) : lossy_row(p, t, frame.u);

        const SimState lab = to_lab_frame(state, p, t);
        if (p.kappa == 0.0) {
            // both the integrated state and the analytic one live in the
            // co-rotating frame; compare them there
            const StateMetrics m =
                state_metrics(state, SimState::pure(realize_ideal_state(p, t, trunc), trunc));
            row.fidelity = m.fidelity;
            row.trace_distance = m.trace_distance;
        } else {
            // the analytic density carries the lab-frame phases e^{+-2iut}
            const Eigen::MatrixXcd ideal =
                realize_dressed_density(dressed_density(p, t), frame, trunc);
            const StateMetrics m = state_metrics(lab, SimState::mixed(ideal, trunc));
            row.fidelity = m.fidelity;
            row.trace_distance = m.trace_distance;
        }

        const CoherentPair pair =
            p.kappa == 0.0 ? coherent_amplitudes(p, t) : lossy_amplitudes(p, t);
        const CoherentPair flip{-pair.alpha, -pair.beta};
        const Eigen::VectorXcd vb = atom_field_vector(
            frame.dressed_ket(DressedLevel::B).cast<cplx>(), field_vector(pair, trunc), trunc);
        const Eigen::VectorXcd vc = atom_field_vector(
            frame.dressed_ket(DressedLevel::C).cast<cplx>(), field_vector(flip, trunc), trunc);
        if (lab.kind == SimState::Kind::density)
            row.q_oracle = 2.0 * std::abs(vb.dot(lab.rho * vc));
        else
            row.q_oracle = 2.0 * std::abs(vb.dot(lab.psi) * std::conj(vc.dot(lab.psi)));

        try {
            const ProjectionResult proj = project_atom(lab, AtomLevel::a);
            const Eigen::MatrixXcd field = partial_trace_atom(proj.state);
            const OracleConcurrence oc = oracle_concurrence(field, pair.alpha, pair.beta, trunc);
            row.C_oracle = oc.concurrence;
            row.leakage = oc.leakage;
            const auto [n1o, n2o] = field_mode_numbers(field, trunc);
            row.N1_oracle = n1o;
            row.N2_oracle = n2o;
        } catch (const degenerate_mode_error&) {
            row.degenerate = true; // coincident labels (t = 0): no qubit basis
        }
        rows.push_back(row);
    }
    return rows;
}

std::string cell_value(const TimeSeriesRow& row, const std::string& col) {
    if (col == "t")
        return format_double(row.t);
    if (col == "degenerate")
        return row.degenerate ? "1" : "0";
    if (row.degenerate)
        return "";
    if (col == "C")
        return format_double(row.C);
    if (col == "N")
        return format_double(row.N1 + row.N2);
    if (col == "N1")
        return format_double(row.N1);
    if (col == "N2")
        return format_double(row.N2);
    if (col == "q")
        return format_double(row.q);
    if (col == "alpha_re")
        return format_double(row.alpha.real());
    if (col == "alpha_im")
        return format_double(row.alpha.imag());
    if (col == "beta_re")
        return format_double(row.beta.real());
    if (col == "beta_im")
        return format_double(row.beta.imag());
    if (col == "norm")
        return format_double(row.norm);
    if (col == "P_a")
        return format_double(row.P_a);
    if (col == "P_b")
        return format_double(row.P_b);
    if (col == "P_c")
        return format_double(row.P_c);
    if (col == "fidelity")
        return format_double(row.fidelity);
    if (col == "trace_distance")
        return format_double(row.trace_distance);
    if (col == "leakage")
        return format_double(row.leakage);
    throw validation_error("emit_csv: unknown column '" + col + "'");
}

} // namespace

std::string sign_to_name(BranchSign s) { return s == BranchSign::plus ? "plus" : "minus"; }

BranchSign sign_from_name(const std::string& name) {
    if (name == "plus")
        return BranchSign::plus;
    if (name == "minus")
        return BranchSign::minus;
    throw validation_error("unknown sign '" + name + "' (use plus or minus)");
}

std::string envelope_to_name(EnvelopeLattice e) {
    switch (e) {
    case EnvelopeLattice::none: return "none";
    case EnvelopeLattice::plus: return "plus";
    case EnvelopeLattice::minus: return "minus";
    }
    return "none";
}

EnvelopeLattice envelope_from_name(const std::string& name) {
    if (name == "none")
        return EnvelopeLattice::none;
    if (name == "plus")
        return EnvelopeLattice::plus;
    if (name == "minus")
        return EnvelopeLattice::minus;
    throw validation_error("unknown envelope '" + name + "' (use none, plus or minus)");
}

void SweepConfig::validate() const {
    // reconstruct so a default/deserialized params struct gets checked too
    ModelParams(params.omega1, params.omega2, params.g1, params.g2, params.kappa, params.sign);
    if (!(t_min >= 0.0) || !(t_max > t_min) || !std::isfinite(t_max))
        throw validation_error("sweep: need 0 <= t_min < t_max");
    if (steps < 2)
        throw validation_error("sweep: steps must be >= 2");
    for (const std::string& key : outputs)
        if (!known_output(key))
            throw validation_error("sweep: unknown output column '" + key + "'");
    if (mode == SweepMode::lossless && params.kappa != 0.0)
        throw validation_error("sweep: lossless mode requires kappa = 0");
    if (mode == SweepMode::lossy && params.kappa > 0.0 && params.sign == BranchSign::minus)
        throw validation_error(
            "sweep: the dissipative solution covers the plus branch (a detection); use sign=plus");
    if (mode == SweepMode::oracle_compare) {
        if (!truncation || !dt)
            throw validation_error("sweep: oracle comparison needs a truncation and dt");
        if (!(*dt > 0.0) || !std::isfinite(*dt))
            throw validation_error("sweep: dt must be positive");
        if (params.sign == BranchSign::minus)
            throw validation_error(
                "sweep: oracle comparison projects onto the a outcome; use sign=plus");
    }
}

std::vector<double> sweep_times(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<double> out;
    if (cfg.envelope == EnvelopeLattice::none) {
        out.reserve(cfg.steps + 1);
        const double span = cfg.t_max - cfg.t_min;
        for (int i = 0; i <= cfg.steps; ++i)
            out.push_back(cfg.t_min + span * i / cfg.steps);
        return out;
    }
    const double u = rabi_norm(cfg.params.omega1, cfg.params.omega2);
    const double period = std::numbers::pi / u; // cos(2ut) repeats every pi/u
    const double offset = cfg.envelope == EnvelopeLattice::plus ? 0.0 : 0.5 * period;
    long k = (long)std::ceil((cfg.t_min - offset) / period - 1e-9);
    if (k < 0)
        k = 0;
    for (;; ++k) {
        const double t = offset + k * period;
        if (t > cfg.t_max + period * 1e-9)
            break;
        out.push_back(t);
    }
    return out;
}

std::vector<TimeSeriesRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const std::vector<double> times = sweep_times(cfg);
    if (cfg.mode == SweepMode::oracle_compare) {
        if (times.empty())
            throw validation_error("sweep: no sample points in range");
        return oracle_rows(cfg, times);
    }
    std::vector<TimeSeriesRow> rows;
    rows.reserve(times.size());
    if (cfg.mode == SweepMode::lossy && cfg.params.kappa > 0.0) {
        const double u = rabi_norm(cfg.params.omega1, cfg.params.omega2);
        for (double t : times)
            rows.push_back(lossy_row(cfg.params, t, u));
    } else {
        // lossless mode, or a lossy request at kappa = 0 (same physics)
        for (double t : times)
            rows.push_back(lossless_row(cfg.params, t));
    }
    return rows;
}

std::vector<std::string> column_names(const SweepConfig& cfg) {
    std::vector<std::string> cols = {"t"};
    for (const std::string& key : normalized_outputs(cfg)) {
        if (key == "alpha") {
            cols.emplace_back("alpha_re");
            cols.emplace_back("alpha_im");
        } else if (key == "beta") {
            cols.emplace_back("beta_re");
            cols.emplace_back("beta_im");
        } else if (key == "detection_probs") {
            cols.emplace_back("P_a");
            cols.emplace_back("P_b");
            cols.emplace_back("P_c");
        } else {
            cols.push_back(key);
        }
    }
    if (cfg.mode == SweepMode::oracle_compare) {
        cols.emplace_back("fidelity");
        cols.emplace_back("trace_distance");
        cols.emplace_back("leakage");
    }
    cols.emplace_back("degenerate");
    return cols;
}

std::string format_double(double v) {
    if (!std::isfinite(v))
        throw validation_error("format_double: non-finite value");
    std::array<char, 32> buf;
    const std::to_chars_result res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string meta_path_for(const std::string& csv_path) {
    const std::string suffix = ".csv";
    if (csv_path.size() > suffix.size() &&
        csv_path.compare(csv_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return csv_path.substr(0, csv_path.size() - suffix.size()) + ".meta.json";
    return csv_path + ".meta.json";
}

void emit_csv(const std::vector<TimeSeriesRow>& rows, const SweepConfig& cfg,
              const std::string& path) {
    cfg.validate();
    const std::vector<std::string> cols = column_names(cfg);

    ensure_parent_dir(path);
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs)
        throw io_error("emit_csv: cannot open " + path);
    std::string line;
    auto put_line = [&ofs, &line](const std::vector<std::string>& cells) {
        line.clear();
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                line += ',';
            line += cells[i];
        }
        line += "\r\n";
        ofs.write(line.data(), (std::streamsize)line.size());
    };
    put_line(cols);
    std::vector<std::string> cells;
    for (const TimeSeriesRow& row : rows) {
        cells.clear();
        for (const std::string& col : cols)
            cells.push_back(cell_value(row, col));
        put_line(cells);
    }
    ofs.flush();
    if (!ofs)
        throw io_error("emit_csv: write failed for " + path);

    nlohmann::ordered_json meta;
    meta["tool"] = tool_name;
    meta["version"] = tool_version;
    meta["config"] = config_to_json(cfg);
    meta["columns"] = cols;
    meta["rows"] = rows.size();
    write_json(meta, meta_path_for(path));
}

nlohmann::ordered_json config_to_json(const SweepConfig& cfg) {
    nlohmann::ordered_json j;
    j["params"] = {{"omega1", cfg.params.omega1}, {"omega2", cfg.params.omega2},
                   {"g1", cfg.params.g1},         {"g2", cfg.params.g2},
                   {"kappa", cfg.params.kappa},   {"sign", sign_to_name(cfg.params.sign)}};
    j["t_min"] = cfg.t_min;
    j["t_max"] = cfg.t_max;
    j["steps"] = cfg.steps;
    j["mode"] = mode_name(cfg.mode);
    j["envelope"] = envelope_to_name(cfg.envelope);
    j["outputs"] = normalized_outputs(cfg);
    if (cfg.truncation)
        j["truncation"] = {{"dim1", cfg.truncation->dim1}, {"dim2", cfg.truncation->dim2}};
    if (cfg.dt)
        j["dt"] = *cfg.dt;
    return j;
}

SweepConfig config_from_json(const nlohmann::ordered_json& j) {
    SweepConfig cfg;
    double omega1 = 100.0, omega2 = 200.0, g1 = 1.0, g2 = 1.0, kappa = 0.0;
    BranchSign sign = BranchSign::plus;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        omega1 = p.value("omega1", omega1);
        omega2 = p.value("omega2", omega2);
        g1 = p.value("g1", g1);
        g2 = p.value("g2", g2);
        kappa = p.value("kappa", kappa);
        sign = sign_from_name(p.value("sign", "plus"));
    }
    cfg.params = ModelParams(omega1, omega2, g1, g2, kappa, sign);
    cfg.t_min = j.value("t_min", cfg.t_min);
    cfg.t_max = j.value("t_max", cfg.t_max);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.mode = mode_from(j.value("mode", "lossless"));
    cfg.envelope = envelope_from_name(j.value("envelope", "none"));
    if (j.contains("outputs"))
        cfg.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (j.contains("truncation")) {
        const auto& tj = j.at("truncation");
        cfg.truncation = TruncationSpec(tj.value("dim1", 16), tj.value("dim2", 16));
    }
    if (j.contains("dt"))
        cfg.dt = j.at("dt").get<double>();
    return cfg;
}

SweepConfig fig2_config() {
    SweepConfig cfg;
    cfg.params = ModelParams(100.0, 200.0, 1.0, 1.0, 0.0, BranchSign::plus);
    cfg.t_min = 0.0;
    cfg.t_max = 100.0;
    cfg.steps = 2000;
    cfg.mode = SweepMode::lossless;
    cfg.outputs = {"C", "N1", "N2", "N"};
    return cfg;
}

std::array<SweepConfig, 3> fig3_configs() {
    std::array<SweepConfig, 3> out;
    const std::array<double, 3> kappas = {0.005, 0.05, 0.1};
    for (std::size_t i = 0; i < kappas.size(); ++i) {
        SweepConfig cfg;
        cfg.params = ModelParams(200.0, 200.0, 1.0, 1.0, kappas[i], BranchSign::plus);
        cfg.t_min = 0.0;
        cfg.t_max = 25.0;
        cfg.steps = 2000; // unused: the envelope lattice sets the grid
        cfg.mode = SweepMode::lossy;
        cfg.envelope = EnvelopeLattice::plus;
        cfg.outputs = {"C", "N"};
        out[i] = cfg;
    }
    return out;
}

std::vector<std::string> write_figure_data(const std::string& which, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec); // open errors are reported per file below
    std::vector<std::string> written;
    auto emit = [&written, &out_dir](const SweepConfig& cfg, const std::string& name) {
        const std::vector<TimeSeriesRow> rows = run_sweep(cfg);
        const std::string path = (fs::path(out_dir) / name).string();
        emit_csv(rows, cfg, path);
        written.push_back(path);
    };
    if (which == "fig2") {
        emit(fig2_config(), "fig2.csv");
    } else if (which == "fig3") {
        for (const SweepConfig& cfg : fig3_configs())
            emit(cfg, "fig3_kappa_" + format_double(cfg.params.kappa) + ".csv");
    } else {
        throw validation_error("figures: unknown preset '" + which + "' (use fig2 or fig3)");
    }
    return written;
}

nlohmann::ordered_json compare_report(const SweepConfig& cfg, const CompareTolerances& tol) {
    if (cfg.mode != SweepMode::oracle_compare)
        throw validation_error("compare_report: config mode must be oracle_compare");
    const std::vector<TimeSeriesRow> rows = run_sweep(cfg);

    double max_td = 0.0, min_fid = 1.0, max_leak = 0.0;
    double d_c = 0.0, d_q = 0.0, d_n1 = 0.0, d_n2 = 0.0;
    bool any_compared = false;
    nlohmann::ordered_json jrows = nlohmann::ordered_json::array();
    for (const TimeSeriesRow& row : rows) {
        nlohmann::ordered_json r;
        r["t"] = row.t;
        r["degenerate"] = row.degenerate;
        r["fidelity"] = row.fidelity;
        r["trace_distance"] = row.trace_distance;
        r["leakage"] = row.leakage;
        r["C"] = row.C;
        r["C_oracle"] = row.C_oracle;
        r["q"] = row.q;
        r["q_oracle"] = row.q_oracle;
        r["N1"] = row.N1;
        r["N1_oracle"] = row.N1_oracle;
        r["N2"] = row.N2;
        r["N2_oracle"] = row.N2_oracle;
        jrows.push_back(std::move(r));

        max_td = std::max(max_td, row.trace_distance);
        min_fid = std::min(min_fid, row.fidelity);
        if (row.degenerate)
            continue;
        any_compared = true;
        max_leak = std::max(max_leak, row.leakage);
        d_c = std::max(d_c, std::abs(row.C - row.C_oracle));
        d_q = std::max(d_q, std::abs(row.q - row.q_oracle));
        d_n1 = std::max(d_n1, std::abs(row.N1 - row.N1_oracle));
        d_n2 = std::max(d_n2, std::abs(row.N2 - row.N2_oracle));
    }

    bool pass = any_compared;
    if (cfg.params.kappa == 0.0) {
        pass = pass && min_fid >= tol.fidelity_min;
    } else {
        pass = pass && max_td <= tol.trace_distance && d_c <= tol.concurrence &&
               max_leak < tol.leakage;
    }

    nlohmann::ordered_json rep;
    rep["tool"] = tool_name;
    rep["version"] = tool_version;
    rep["config"] = config_to_json(cfg);
    rep["tolerances"] = {{"trace_distance", tol.trace_distance},
                         {"fidelity_min", tol.fidelity_min},
                         {"concurrence", tol.concurrence},
                         {"leakage", tol.leakage}};
    rep["summary"] = {{"max_trace_distance", max_td}, {"min_fidelity", min_fid},
                      {"max_leakage", max_leak},      {"max_abs_dC", d_c},
                      {"max_abs_dq", d_q},            {"max_abs_dN1", d_n1},
                      {"max_abs_dN2", d_n2}};
    rep["rows"] = std::move(jrows);
    rep["pass"] = pass;
    return rep;
}

void write_json(const nlohmann::ordered_json& doc, const std::string& path) {
    ensure_parent_dir(path);
    std::ofstream ofs(path, std::ios::binary | std::ios::trunc);
    if (!ofs)
        throw io_error("write_json: cannot open " + path);
    const std::string text = doc.dump(2) + "\n";
    ofs.write(text.data(), (std::streamsize)text.size());
    ofs.flush();
    if (!ofs)
        throw io_error("write_json: write failed for " + path);
}

} // namespace ecsgen
