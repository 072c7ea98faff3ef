// Command-line front end: simulate/resume sweeps, enumerate points, run
// fits on result tables, print Page-curve references, and summarize runs.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ftraj/ed.hpp"
#include "ftraj/errors.hpp"
#include "ftraj/orchestrator.hpp"

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ftraj::ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ftraj::ConfigError(path + ": " + e.what());
    }
}

ftraj::RunConfig config_from_file(const std::string& path,
                                  std::optional<std::uint64_t> seed) {
    json j = read_json_file(path);
    if (seed) j["ensemble"]["master_seed"] = *seed;
    return ftraj::parse_config(j);
}

ftraj::RunConfig config_from_checkpoint(const std::string& run_dir,
                                        std::optional<std::uint64_t> seed) {
    json manifest = ftraj::load_manifest(run_dir);
    json cfgj = manifest.at("config");
    if (seed) cfgj["ensemble"]["master_seed"] = *seed;
    return ftraj::parse_config(cfgj);
}

int cmd_simulate(const std::string& config_path, const std::string& resume,
                 std::optional<std::uint64_t> seed, std::optional<int> workers,
                 int max_points) {
    ftraj::RunConfig config =
        !config_path.empty() ? config_from_file(config_path, seed)
                             : config_from_checkpoint(resume, seed);
    if (workers) config.workers = *workers;
    ftraj::SimulateOutcome out = ftraj::simulate(config, resume, max_points);
    std::cout << "run directory: " << out.run_dir << "\n"
              << "points: " << out.n_total << " total, " << out.n_done
              << " completed this call, " << out.n_skipped
              << " already done, " << out.n_failed << " failed\n";
    for (const auto& f : out.failures) std::cout << "failed: " << f << "\n";
    return out.n_failed > 0 ? 1 : 0;
}

int cmd_sweep(const std::string& config_path, const std::string& dir) {
    if (!dir.empty()) {
        json manifest = ftraj::load_manifest(dir);
        for (const auto& p : manifest.at("points"))
            std::cout << p.at("index").get<int>() << "\t"
                      << p.at("status").get<std::string>() << "\t"
                      << p.at("overrides").dump() << "\n";
        std::cout << manifest.at("points").size() << " points\n";
        return 0;
    }
    ftraj::RunConfig config = config_from_file(config_path, std::nullopt);
    std::vector<ftraj::SweepPoint> points = ftraj::expand_sweep(config);
    for (const auto& p : points)
        std::cout << p.index << "\tplanned\t" << p.overrides.dump() << "\n";
    std::cout << points.size() << " points\n";
    return 0;
}

ftraj::FitSpec::Mode parse_mode(const std::string& name) {
    if (name == "scaling") return ftraj::FitSpec::Mode::Scaling;
    if (name == "lorentzian") return ftraj::FitSpec::Mode::Lorentzian;
    if (name == "crossover") return ftraj::FitSpec::Mode::Crossover;
    if (name == "lorentzian-scan")
        return ftraj::FitSpec::Mode::LorentzianScan;
    throw ftraj::ConfigError(
        "fit: unknown mode '" + name +
        "' (expected scaling, lorentzian, crossover, or lorentzian-scan)");
}

int cmd_fit(const std::string& table_path, const std::string& mode,
            const std::string& observable, std::optional<double> fix_b,
            const std::vector<std::string>& where, double gamma_max,
            const std::string& out_prefix) {
    ftraj::FitSpec spec;
    spec.mode = parse_mode(mode);
    spec.observable = observable;
    spec.fix_b = fix_b;
    spec.gamma_max = gamma_max;
    spec.out_prefix = out_prefix;
    for (const auto& w : where) {
        auto eq = w.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ftraj::ConfigError("fit: --where expects column=value, got '" +
                                     w + "'");
        try {
            spec.where[w.substr(0, eq)] = std::stod(w.substr(eq + 1));
        } catch (const std::exception&) {
            throw ftraj::ConfigError("fit: cannot parse filter value in '" +
                                     w + "'");
        }
    }
    std::vector<ftraj::ResultRow> rows = ftraj::read_table_file(table_path);
    json report = ftraj::run_fit(rows, spec);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_page_ref(int L, int samples, std::uint64_t seed) {
    std::cout << ftraj::page_reference(L, samples, seed) << "\n";
    return 0;
}

int cmd_report(const std::string& dir) {
    std::cout << ftraj::summarize_run(dir).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Trajectory simulator and steady-state analysis for monitored "
        "fermion chains"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand(
        "simulate", "Run a configured sweep (or resume a checkpoint)");
    std::string sim_config, sim_resume;
    std::uint64_t sim_seed = 0;
    int sim_workers = 1, sim_max_points = -1;
    sim->add_option("--config", sim_config, "Run configuration (JSON)");
    sim->add_option("--resume", sim_resume,
                    "Existing run directory to continue");
    sim->add_option("--seed", sim_seed, "Override the ensemble master seed");
    sim->add_option("--workers", sim_workers,
                    "Override the trajectory worker count");
    sim->add_option("--max-points", sim_max_points,
                    "Stop after this many points (checkpoint stays resumable)");

    auto* sweep = app.add_subcommand(
        "sweep", "List the sweep's parameter points without running them");
    std::string sweep_config, sweep_dir;
    sweep->add_option("--config", sweep_config, "Run configuration (JSON)");
    sweep->add_option("--dir", sweep_dir,
                      "Run directory whose point statuses to list instead");

    auto* fit = app.add_subcommand("fit", "Fit curves to a result table");
    std::string fit_table, fit_mode = "scaling",
                fit_observable = "entropy:half", fit_out;
    double fit_fix_b = 0.0,
           fit_gamma_max = std::numeric_limits<double>::infinity();
    std::vector<std::string> fit_where;
    fit->add_option("--table", fit_table, "results.csv produced by simulate")
        ->required();
    fit->add_option("--mode", fit_mode,
                    "scaling | lorentzian | crossover | lorentzian-scan");
    fit->add_option("--observable", fit_observable,
                    "Observable column to fit (default entropy:half)");
    auto* fixb_opt =
        fit->add_option("--fix-b", fit_fix_b, "Hold the scaling exponent fixed");
    fit->add_option("--where", fit_where,
                    "Equality filter column=value (repeatable)");
    fit->add_option("--gamma-max", fit_gamma_max,
                    "Crossover mode: drop points with gamma above this");
    fit->add_option("--out", fit_out,
                    "Path prefix for plot-ready CSV output");

    auto* page = app.add_subcommand(
        "page-ref", "Print the random-state entanglement reference value");
    int page_L = 0, page_samples = 200;
    std::uint64_t page_seed = 1;
    page->add_option("--L", page_L, "Number of sites")->required();
    page->add_option("--samples", page_samples, "Random states to average");
    page->add_option("--seed", page_seed, "Sampling seed");

    auto* report =
        app.add_subcommand("report", "Summarize a run directory as JSON");
    std::string report_dir;
    report->add_option("--dir", report_dir, "Run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (sim_config.empty() && sim_resume.empty())
                throw ftraj::ConfigError(
                    "simulate: pass --config, --resume, or both");
            return cmd_simulate(
                sim_config, sim_resume,
                sim->count("--seed") ? std::optional<std::uint64_t>(sim_seed)
                                     : std::nullopt,
                sim->count("--workers") ? std::optional<int>(sim_workers)
                                        : std::nullopt,
                sim_max_points);
        }
        if (sweep->parsed()) {
            if (sweep_config.empty() && sweep_dir.empty())
                throw ftraj::ConfigError("sweep: pass --config or --dir");
            return cmd_sweep(sweep_config, sweep_dir);
        }
        if (fit->parsed())
            return cmd_fit(fit_table, fit_mode, fit_observable,
                           fixb_opt->count()
                               ? std::optional<double>(fit_fix_b)
                               : std::nullopt,
                           fit_where, fit_gamma_max, fit_out);
        if (page->parsed()) return cmd_page_ref(page_L, page_samples, page_seed);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const ftraj::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
