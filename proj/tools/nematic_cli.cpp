// Command-line driver for the nematic colloid toolkit.
//
//   profile   D_lambda curves for a surface angle, with CSV profile dumps
//   minimize  full axisymmetric minimization at one (xi, eta) point
//   trial     build and evaluate the upper-bound constructions
//   sweep     batch runs over a JSON-configured parameter schedule
//   report    re-emit CSV/JSON/SVG tables from stored records

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nematic/nematic.hpp"

namespace fs = std::filesystem;
using namespace nematic;

namespace {

json load_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j;
    in >> j;
    return j;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

int run_profile(const std::string& out_dir, double theta, const std::string& lambdas_csv,
                int n_nodes) {
    const std::vector<double> lambdas = parse_list(lambdas_csv);
    const ProfileGrid grid(20.0 / kappa(), n_nodes);
    const QTensor q0 = boundary_tensor(theta);
    const auto table = d_lambda_curve(q0, lambdas, grid);

    fs::create_directories(out_dir);
    std::string csv = "lambda,d_lambda\n";
    SvgSeries series{"D_lambda", {}, {}};
    for (const auto& [lambda, d] : table) {
        csv += fmt17(lambda) + "," + fmt17(d) + "\n";
        series.x.push_back(lambda);
        series.y.push_back(d);
        ProfileResult res = minimize_profile(q0, lambda, grid);
        std::ostringstream name;
        name << "profile_lambda" << lambda << ".csv";
        write_profile_csv(fs::path(out_dir) / name.str(), grid, res, theta, lambda);
    }
    write_text_file(fs::path(out_dir) / "d_lambda.csv", csv);
    write_text_file(fs::path(out_dir) / "d_lambda.svg",
                    svg_line_plot("transition cost", "lambda", "D_lambda", {series}));
    std::cout << "wrote " << table.size() << " profiles to " << out_dir << "\n";
    std::cout << "d_infinity(theta) = " << d_infinity(theta) << "\n";
    return 0;
}

int run_minimize(const HarnessConfig& cfg, const std::string& out_dir) {
    SweepSpec spec = cfg.sweep;
    if (spec.points.empty()) spec.points.push_back({cfg.model.xi, cfg.model.eta});
    const fs::path run_dir = next_run_dir(out_dir);
    const auto records = run_sweep(spec, run_dir);
    write_text_file(run_dir / "records.csv", records_to_csv(records));
    write_json_file(run_dir / "config.json", cfg.raw);

    const RunRecord* best = nullptr;
    bool all_ok = true;
    for (const auto& r : records) {
        if (r.status.rfind("failed", 0) == 0) all_ok = false;
        if (r.kind == "minimize" && (!best || r.e_total < best->e_total)) best = &r;
    }
    if (best) {
        std::cout << "minimizer: init=" << best->init << " E=" << best->e_total
                  << " etaE=" << best->eta_e << " sym_ratio=" << best->sym_ratio << "\n";
        if (best->ring.found)
            std::cout << "ring: r=" << best->ring.r << " theta=" << best->ring.theta
                      << " beta=" << best->ring.beta << "\n";
        else
            std::cout << "ring: not found\n";
    }
    std::cout << "records in " << run_dir << "\n";
    return all_ok ? 0 : 1;
}

int run_trial(const HarnessConfig& cfg, const std::string& out_dir, const std::string& mode,
              double h, double eps_mollify) {
    const fs::path run_dir = next_run_dir(out_dir);
    AxiGridOptions gopts = grid_options_for(cfg.preset);
    if (cfg.n_theta_override > 0) gopts.n_theta = cfg.n_theta_override;
    const AxiGrid grid = make_axi_grid(cfg.model, gopts);

    AxiField field;
    json info;
    if (mode == "saturn") {
        SaturnTrial trial = build_saturn_trial(grid, cfg.model);
        field = trial.field;
        info = {{"mode", "saturn"},
                {"core_converged", trial.core_report.converged},
                {"core_cross_energy", trial.core_cross_energy},
                {"vortex_cells", trial.core_report.vortex_cells}};
        write_patch_csv(run_dir / "core_patch.csv", trial.patch);
    } else if (mode == "finite-lambda") {
        TrialSpec spec;
        spec.mode = TrialSpec::Mode::finite_lambda;
        spec.h = h;
        spec.eps_mollify = eps_mollify;
        spec.params = cfg.model;
        FiniteLambdaTrial trial = build_finite_lambda_trial(grid, spec);
        field = trial.field;
        info = {{"mode", "finite-lambda"},
                {"h", h},
                {"eps_mollify", eps_mollify},
                {"active_intervals", trial.active_intervals},
                {"cap_measure_theta", trial.cap_measure_theta},
                {"cap_solid_angle", trial.cap_solid_angle},
                {"sigma_budget", trial.sigma_budget}};
    } else {
        std::cerr << "unknown trial mode '" << mode << "': use saturn or finite-lambda\n";
        return 2;
    }

    const EnergyBreakdown b = energy(grid, field, cfg.model);
    info["energy"] = {{"total", b.total()},
                      {"elastic", b.elastic},
                      {"nematic", b.nematic},
                      {"field", b.field},
                      {"eta_e", cfg.model.eta * b.total()}};
    const RingLocation ring = locate_ring(grid, field, cfg.model.reg_delta);
    info["ring"] = {{"found", ring.found}, {"r", ring.r}, {"theta", ring.theta},
                    {"beta", ring.beta}};
    write_field_csv(run_dir / "trial.csv", grid, field);
    write_json_file(run_dir / "trial.json", info);
    std::cout << "trial " << mode << ": E=" << b.total()
              << " etaE=" << cfg.model.eta * b.total() << "\n";
    std::cout << "written to " << run_dir << "\n";
    return 0;
}

int run_sweep_cmd(const HarnessConfig& cfg, const std::string& out_dir) {
    const fs::path run_dir = next_run_dir(out_dir);
    const auto records = run_sweep(cfg.sweep, run_dir);
    write_text_file(run_dir / "records.csv", records_to_csv(records));
    json arr = json::array();
    for (const auto& r : records) {
        json rj = record_to_json(r);
        rj["config"] = cfg.raw;
        arr.push_back(rj);
    }
    write_json_file(run_dir / "records.json", arr);
    write_json_file(run_dir / "config.json", cfg.raw);

    bool all_ok = !records.empty();
    for (const auto& r : records)
        if (r.status.rfind("failed", 0) == 0) all_ok = false;
    if (records.size() >= 3) {
        try {
            const ScalingFit fit = fit_scaling(records);
            json fj = {{"points_used", fit.points_used},
                       {"limit_estimate", fit.limit_estimate},
                       {"reference", fit.reference},
                       {"gap", fit.gap}};
            if (fit.has_log_slope) {
                fj["log_slope"] = fit.log_slope;
                fj["log_slope_reference"] = fit.log_slope_reference;
            }
            write_json_file(run_dir / "scaling_fit.json", fj);
        } catch (const std::exception& ex) {
            std::cerr << "scaling fit skipped: " << ex.what() << "\n";
        }
    }
    std::cout << records.size() << " records in " << run_dir << "\n";
    return all_ok ? 0 : 1;
}

int run_report(const std::string& records_path, const std::string& format,
               const std::string& out_dir) {
    const json arr = load_json(records_path);
    std::vector<RunRecord> records;
    for (const auto& rj : arr) {
        RunRecord r;
        r.xi = rj.at("xi").get<double>();
        r.eta = rj.at("eta").get<double>();
        r.lambda = rj.at("lambda").get<double>();
        r.kind = rj.at("kind").get<std::string>();
        r.init = rj.at("init").get<std::string>();
        const auto& e = rj.at("energy");
        r.e_total = e.at("total").get<double>();
        r.e_elastic = e.at("elastic").get<double>();
        r.e_f = e.at("nematic").get<double>();
        r.e_g = e.at("field").get<double>();
        r.e_upper = e.at("upper").get<double>();
        r.e_lower = e.at("lower").get<double>();
        r.eta_e = e.at("eta_e").get<double>();
        r.sym_ratio = rj.at("sym_ratio").get<double>();
        r.ring.found = rj.at("ring").at("found").get<bool>();
        r.ring.r = rj.at("ring").at("r").get<double>();
        r.ring.theta = rj.at("ring").at("theta").get<double>();
        r.status = rj.at("status").get<std::string>();
        records.push_back(r);
    }
    const auto written = report(records, format, out_dir);
    for (const auto& p : written) std::cout << "wrote " << p << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Landau-de Gennes colloid in a strong aligning field"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path, out_dir = "out", preset = "";
    std::uint64_t seed = 1;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "seed for randomized initial noise");
    app.add_option("--threads", threads, "worker threads for sweeps");
    app.add_option("--preset", preset, "grid preset: fast, desk, fine");

    auto* profile_cmd = app.add_subcommand("profile", "1D transition costs D_lambda");
    double theta = kPi / 2.0;
    std::string lambdas = "1,3,10,30";
    int profile_nodes = 1024;
    profile_cmd->add_option("--theta", theta, "surface polar angle");
    profile_cmd->add_option("--lambdas", lambdas, "comma-separated lambda values");
    profile_cmd->add_option("--nodes", profile_nodes, "profile grid nodes");

    auto* minimize_cmd = app.add_subcommand("minimize", "minimize at one parameter point");
    double xi = 0.04, eta = 0.2;
    minimize_cmd->add_option("--xi", xi, "nematic coherence length");
    minimize_cmd->add_option("--eta", eta, "field coherence length");

    auto* trial_cmd = app.add_subcommand("trial", "build and evaluate a trial construction");
    std::string mode = "saturn";
    double trial_h = kPi / 8.0, trial_mollify = kPi / 64.0;
    trial_cmd->add_option("--mode", mode, "saturn or finite-lambda");
    trial_cmd->add_option("--xi", xi, "nematic coherence length");
    trial_cmd->add_option("--eta", eta, "field coherence length");
    trial_cmd->add_option("--width", trial_h, "theta partition width (finite-lambda)");
    trial_cmd->add_option("--mollify", trial_mollify, "smoothing width (finite-lambda)");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a configured parameter sweep");

    auto* report_cmd = app.add_subcommand("report", "emit tables and plots from records");
    std::string records_path, format = "csv";
    report_cmd->add_option("--records", records_path, "records.json from a sweep run")
        ->required();
    report_cmd->add_option("--format", format, "csv, json, or svg");

    CLI11_PARSE(app, argc, argv);

    try {
        HarnessConfig cfg;
        if (!config_path.empty()) cfg = parse_config(load_json(config_path));
        if (!preset.empty()) {
            cfg.preset = preset_from_string(preset);
            cfg.sweep.preset = cfg.preset;
        }
        cfg.sweep.seed = seed;
        if (threads > 0) cfg.sweep.threads = threads;

        if (profile_cmd->parsed()) return run_profile(out_dir, theta, lambdas, profile_nodes);
        if (minimize_cmd->parsed()) {
            if (config_path.empty()) {
                cfg.model.xi = xi;
                cfg.model.eta = eta;
            }
            return run_minimize(cfg, out_dir);
        }
        if (trial_cmd->parsed()) {
            if (config_path.empty()) {
                cfg.model.xi = xi;
                cfg.model.eta = eta;
            }
            return run_trial(cfg, out_dir, mode, trial_h, trial_mollify);
        }
        if (sweep_cmd->parsed()) {
            if (cfg.sweep.points.empty())
                throw std::invalid_argument("sweep: config must list sweep.points");
            return run_sweep_cmd(cfg, out_dir);
        }
        if (report_cmd->parsed()) return run_report(records_path, format, out_dir);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
