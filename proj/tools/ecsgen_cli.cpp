#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecsgen/sweep.hpp"

namespace {

// One holder for every flag a subcommand may expose; presence is queried
// through CLI11 so a config file value wins only when the flag was not given.
struct Flags {
    std::string config_path;
    double omega1 = 100.0;
    double omega2 = 200.0;
    double g1 = 1.0;
    double g2 = 1.0;
    double kappa = 0.0;
    std::string sign = "plus";
    double t_min = 0.0;
    double t_max = 100.0;
    int steps = 2000;
    std::string envelope = "none";
    std::vector<std::string> outputs;
    int dim1 = 16;
    int dim2 = 16;
    double dt = 1e-3;
    std::string out;
};

void add_model_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path,
                    "JSON config file; explicitly passed flags override it");
    cmd->add_option("--omega1", f.omega1, "classical Rabi frequency on c<->a");
    cmd->add_option("--omega2", f.omega2, "classical Rabi frequency on b<->a");
    cmd->add_option("--g1", f.g1, "cavity coupling of mode 1");
    cmd->add_option("--g2", f.g2, "cavity coupling of mode 2");
    cmd->add_option("--kappa", f.kappa, "cavity amplitude decay rate");
    cmd->add_option("--sign", f.sign, "projected branch: plus or minus");
    cmd->add_option("--t-min", f.t_min, "start of the time window");
    cmd->add_option("--t-max", f.t_max, "end of the time window");
    cmd->add_option("--steps", f.steps, "uniform grid intervals (rows = steps + 1)");
}

// Merge config file (if any) with the flags that were actually passed.
ecsgen::SweepConfig assemble_config(CLI::App* cmd, const Flags& f) {
    ecsgen::SweepConfig cfg;
    const bool from_file = cmd->count("--config") > 0;
    if (from_file) {
        std::ifstream ifs(f.config_path);
        if (!ifs)
            throw ecsgen::io_error("cannot open config file " + f.config_path);
        cfg = ecsgen::config_from_json(nlohmann::ordered_json::parse(ifs));
    }
    auto flag_wins = [&](const char* name) { return !from_file || cmd->count(name) > 0; };

    const double omega1 = flag_wins("--omega1") ? f.omega1 : cfg.params.omega1;
    const double omega2 = flag_wins("--omega2") ? f.omega2 : cfg.params.omega2;
    const double g1 = flag_wins("--g1") ? f.g1 : cfg.params.g1;
    const double g2 = flag_wins("--g2") ? f.g2 : cfg.params.g2;
    const double kappa = flag_wins("--kappa") ? f.kappa : cfg.params.kappa;
    const ecsgen::BranchSign sign =
        flag_wins("--sign") ? ecsgen::sign_from_name(f.sign) : cfg.params.sign;
    cfg.params = ecsgen::ModelParams(omega1, omega2, g1, g2, kappa, sign);

    if (flag_wins("--t-min"))
        cfg.t_min = f.t_min;
    if (flag_wins("--t-max"))
        cfg.t_max = f.t_max;
    if (flag_wins("--steps"))
        cfg.steps = f.steps;
    if (cmd->get_option_no_throw("--envelope") && flag_wins("--envelope"))
        cfg.envelope = ecsgen::envelope_from_name(f.envelope);
    if (cmd->get_option_no_throw("--outputs") && flag_wins("--outputs"))
        cfg.outputs = f.outputs;
    if (cmd->get_option_no_throw("--dim1")) {
        const int dim1 = flag_wins("--dim1") ? f.dim1 : (cfg.truncation ? cfg.truncation->dim1 : f.dim1);
        const int dim2 = flag_wins("--dim2") ? f.dim2 : (cfg.truncation ? cfg.truncation->dim2 : f.dim2);
        cfg.truncation = ecsgen::TruncationSpec(dim1, dim2);
        cfg.dt = flag_wins("--dt") ? f.dt : cfg.dt.value_or(f.dt);
    }
    return cfg;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Two-mode entangled coherent state generation: closed-form sweeps "
                 "and a truncated-Fock-space cross-check"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* sweep = app.add_subcommand(
        "sweep", "time sweep of the closed forms (kappa = 0: pure branch; kappa > 0: "
                 "dissipative a-detection state)");
    add_model_flags(sweep, f);
    sweep->add_option("--envelope", f.envelope,
                      "sample on the cos(2ut) = +1 (plus) or -1 (minus) lattice");
    sweep->add_option("--outputs", f.outputs,
                      "columns: C,N,N1,N2,q,alpha,beta,norm,detection_probs")
        ->delimiter(',');
    sweep->add_option("--out", f.out, "CSV path (a .meta.json sibling is written)");

    CLI::App* figures =
        app.add_subcommand("figures", "write the preset reference sweeps (fig2 or fig3)");
    std::string which;
    figures->add_option("which", which, "fig2 or fig3")->required();
    std::string out_dir = ".";
    figures->add_option("--out-dir", out_dir, "output directory");

    CLI::App* compare = app.add_subcommand(
        "compare", "integrate the truncated model and report discrepancies against "
                   "the closed forms (JSON)");
    add_model_flags(compare, f);
    compare->add_option("--dim1", f.dim1, "Fock levels kept in mode 1");
    compare->add_option("--dim2", f.dim2, "Fock levels kept in mode 2");
    compare->add_option("--dt", f.dt, "integrator step");
    compare->add_option("--out", f.out, "report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (sweep->parsed()) {
        ecsgen::SweepConfig cfg = assemble_config(sweep, f);
        cfg.mode = cfg.params.kappa > 0.0 ? ecsgen::SweepMode::lossy
                                          : ecsgen::SweepMode::lossless;
        const std::vector<ecsgen::TimeSeriesRow> rows = ecsgen::run_sweep(cfg);
        const std::string out = f.out.empty() ? "sweep.csv" : f.out;
        ecsgen::emit_csv(rows, cfg, out);
        std::cout << "wrote " << out << " (" << rows.size() << " rows) and "
                  << ecsgen::meta_path_for(out) << "\n";
        return 0;
    }
    if (figures->parsed()) {
        const std::vector<std::string> paths = ecsgen::write_figure_data(which, out_dir);
        for (const std::string& p : paths)
            std::cout << "wrote " << p << "\n";
        return 0;
    }
    // compare
    ecsgen::SweepConfig cfg = assemble_config(compare, f);
    cfg.mode = ecsgen::SweepMode::oracle_compare;
    const nlohmann::ordered_json report = ecsgen::compare_report(cfg);
    const std::string out = f.out.empty() ? "compare.json" : f.out;
    ecsgen::write_json(report, out);
    std::cout << "wrote " << out << "\n";
    if (!report.at("pass").get<bool>()) {
        std::cerr << "comparison exceeded the declared tolerances:\n"
                  << report.at("summary").dump(2) << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ecsgen::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        // validation failures, degenerate cases, truncation diagnostics,
        // malformed JSON: all configuration-class errors
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
