#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ftraj/config.hpp"
#include "ftraj/errors.hpp"
#include "ftraj/fitting.hpp"
#include "ftraj/orchestrator.hpp"
#include "ftraj/table.hpp"

using nlohmann::json;
using namespace ftraj;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("ftraj_test_" + tag);
    fs::remove_all(p);
    return p;
}

json chain_config(const fs::path& dir, double gamma = 0.5) {
    return json{{"model", {{"model", "tight-binding"},
                           {"L", 4},
                           {"gamma", gamma}}},
                {"schedule", {{"dt", 0.05}, {"t_f", 1.0}}},
                {"ensemble", {{"n_traj", 3}, {"master_seed", 11}}},
                {"observables", {"entropy:half"}},
                {"output", {{"directory", dir.string()}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Saturating curve used by the synthetic fit tables.
double curve(double A, double C, double b, double L) {
    return A * L / (1.0 + C * std::pow(L, b));
}

ResultRow scaling_row(int L, double gamma, double y, double err) {
    ResultRow r;
    r.model = "tight-binding";
    r.L = L;
    r.J = 1.0;
    r.gamma = gamma;
    r.observable = "entropy:half";
    r.steady_value = y;
    r.stderr_value = err;
    r.t0 = 1000;
    r.tf = 2000;
    r.n_traj = 48;
    r.master_seed = 0;
    r.config_hash = "h";
    return r;
}

}  // namespace

TEST_SUITE("orchestrator") {

TEST_CASE("empty sweep still produces a valid run directory") {
    fs::path dir = fresh_dir("empty");
    json j = chain_config(dir);
    j["sweep"] = {{"L", json::array()}};
    SimulateOutcome out = simulate(parse_config(j));
    CHECK(out.n_total == 0);
    CHECK(out.n_done == 0);
    CHECK(out.n_failed == 0);
    CHECK(slurp(dir / "results.csv") == table_header_line() + "\n");
    json manifest = load_manifest(dir.string());
    CHECK(manifest["points"].empty());
    CHECK(manifest["tool"] == "ftraj");
}

TEST_CASE("a sweep runs, checkpoints, and reruns identically") {
    fs::path a = fresh_dir("run_a");
    json j = chain_config(a);
    j["sweep"] = {{"L", {4, 6}}};
    SimulateOutcome out = simulate(parse_config(j));
    CHECK(out.n_total == 2);
    CHECK(out.n_done == 2);
    CHECK(out.n_failed == 0);

    std::vector<ResultRow> rows = read_table_file((a / "results.csv").string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].L == 4);
    CHECK(rows[1].L == 6);
    CHECK(rows[0].steady_value > 0.0);
    CHECK(rows[0].tf == doctest::Approx(1.0));
    CHECK(fs::exists(a / "series" / "point_0000.csv"));
    CHECK(fs::exists(a / "points" / "point_0001.json"));

    // Same physics into a different directory: identical table bytes,
    // because the hash and seeds ignore where output lands.
    fs::path b = fresh_dir("run_b");
    json j2 = chain_config(b);
    j2["sweep"] = {{"L", {4, 6}}};
    simulate(parse_config(j2));
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
}

TEST_CASE("interrupted runs resume to the uninterrupted table") {
    fs::path full = fresh_dir("full");
    json jf = chain_config(full);
    jf["sweep"] = {{"L", {4, 6}}};
    simulate(parse_config(jf));

    fs::path part = fresh_dir("part");
    json jp = chain_config(part);
    jp["sweep"] = {{"L", {4, 6}}};
    RunConfig cfg = parse_config(jp);
    SimulateOutcome first = simulate(cfg, "", 1);
    CHECK(first.n_done == 1);
    json mid = load_manifest(part.string());
    CHECK(mid["points"][0]["status"] == "done");
    CHECK(mid["points"][1]["status"] == "pending");

    SimulateOutcome second = simulate(cfg, part.string());
    CHECK(second.n_skipped == 1);
    CHECK(second.n_done == 1);
    CHECK(slurp(part / "results.csv") == slurp(full / "results.csv"));

    // A third resume has nothing left to do and leaves the table alone.
    SimulateOutcome third = simulate(cfg, part.string());
    CHECK(third.n_done == 0);
    CHECK(third.n_skipped == 2);
    CHECK(slurp(part / "results.csv") == slurp(full / "results.csv"));
}

TEST_CASE("a fresh run refuses a directory that already holds one") {
    fs::path dir = fresh_dir("occupied");
    RunConfig cfg = parse_config(chain_config(dir));
    simulate(cfg);
    CHECK_THROWS_AS(simulate(cfg), ConfigError);
}

TEST_CASE("resume refuses a different configuration") {
    fs::path dir = fresh_dir("hash_mismatch");
    simulate(parse_config(chain_config(dir)));
    RunConfig other = parse_config(chain_config(dir, 0.7));
    CHECK_THROWS_AS(simulate(other, dir.string()), ConfigError);
}

TEST_CASE("damaged checkpoints are reported as corrupt") {
    fs::path dir = fresh_dir("corrupt");
    RunConfig cfg = parse_config(chain_config(dir));
    simulate(cfg);

    SUBCASE("garbage manifest") {
        std::ofstream(dir / "manifest.json") << "not json at all";
        CHECK_THROWS_AS(load_manifest(dir.string()), CorruptCheckpoint);
        CHECK_THROWS_AS(simulate(cfg, dir.string()), CorruptCheckpoint);
    }
    SUBCASE("tampered stored configuration") {
        json m = json::parse(slurp(dir / "manifest.json"));
        m["config"]["model"]["gamma"] = 0.9;
        std::ofstream(dir / "manifest.json") << m.dump(2);
        CHECK_THROWS_AS(load_manifest(dir.string()), CorruptCheckpoint);
    }
    SUBCASE("missing point data for a finished point") {
        fs::remove(dir / "points" / "point_0000.json");
        CHECK_THROWS_AS(simulate(cfg, dir.string()), CorruptCheckpoint);
    }
    SUBCASE("point list shorter than the sweep") {
        json m = json::parse(slurp(dir / "manifest.json"));
        m["points"] = json::array();
        m["n_points"] = 0;
        std::ofstream(dir / "manifest.json") << m.dump(2);
        CHECK_THROWS_AS(simulate(cfg, dir.string()), CorruptCheckpoint);
    }
}

TEST_CASE("one failing point does not sink the sweep") {
    fs::path dir = fresh_dir("partial_failure");
    json j = chain_config(dir);
    // A three-site cut is fine at L=4 but impossible at L=2.
    j["observables"] = {"entropy:3"};
    j["sweep"] = {{"L", {2, 4}}};
    RunConfig cfg = parse_config(j);
    SimulateOutcome out = simulate(cfg);
    CHECK(out.n_done == 1);
    CHECK(out.n_failed == 1);
    REQUIRE(out.failures.size() == 1);
    CHECK(out.failures[0].find("point 0") != std::string::npos);
    CHECK(out.failures[0].find("L=2") != std::string::npos);

    json manifest = load_manifest(dir.string());
    CHECK(manifest["points"][0]["status"] == "failed");
    CHECK(manifest["points"][1]["status"] == "done");
    std::vector<ResultRow> rows = read_table_file((dir / "results.csv").string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].L == 4);

    // Resume retries the failed point (and fails it again, deterministically).
    SimulateOutcome retry = simulate(cfg, dir.string());
    CHECK(retry.n_skipped == 1);
    CHECK(retry.n_failed == 1);

    json rep = summarize_run(dir.string());
    CHECK(rep["points"]["done"] == 1);
    CHECK(rep["points"]["failed"] == 1);
    CHECK(rep["n_rows"] == 1);
}

TEST_CASE("run directories resolve against the output root") {
    json j = chain_config("rel_dir");
    RunConfig cfg = parse_config(j);
    setenv("FTRAJ_OUTPUT_ROOT", "/tmp/ftraj_root", 1);
    CHECK(resolve_run_dir(cfg) ==
          (fs::path("/tmp/ftraj_root") / "rel_dir").string());
    unsetenv("FTRAJ_OUTPUT_ROOT");
    CHECK(resolve_run_dir(cfg) == "rel_dir");

    fs::path abs = fresh_dir("abs_dir");
    setenv("FTRAJ_OUTPUT_ROOT", "/tmp/ftraj_root", 1);
    CHECK(resolve_run_dir(parse_config(chain_config(abs))) == abs.string());
    unsetenv("FTRAJ_OUTPUT_ROOT");

    json no_dir = chain_config("x");
    no_dir["output"]["directory"] = "";
    CHECK_THROWS_AS(resolve_run_dir(parse_config(no_dir)), ConfigError);
}

TEST_CASE("table fits agree with the fitting layer called directly") {
    std::vector<ResultRow> rows;
    std::vector<DataPoint> pts;
    for (int L : {8, 12, 16, 24, 32, 48, 64, 96}) {
        double y = curve(2.0, 0.1, 1.0, L);
        rows.push_back(scaling_row(L, 0.5, y, 0.01));
        pts.push_back({static_cast<double>(L), y, 0.01});
    }
    // Decoy rows that the filters must exclude.
    rows.push_back(scaling_row(8, 0.9, 1.0, 0.01));
    ResultRow decoy = scaling_row(8, 0.5, 99.0, 0.01);
    decoy.observable = "n:1";
    rows.push_back(decoy);

    FitSpec spec;
    spec.mode = FitSpec::Mode::Scaling;
    spec.where = {{"gamma", 0.5}};
    json rep = run_fit(rows, spec);
    ScalingFit direct = fit_scaling(pts);
    CHECK(rep["fit"]["A"].get<double>() == direct.A);
    CHECK(rep["fit"]["C"].get<double>() == direct.C);
    CHECK(rep["fit"]["b"].get<double>() == direct.b);
    CHECK(rep["fit"]["regime"] == "area");
    CHECK(rep["fit"]["weighted"] == true);
    CHECK(rep["fit"]["n_points"] == 8);

    // Unfiltered, the two gamma values collide on L = 8.
    FitSpec no_filter;
    CHECK_THROWS_AS(run_fit(rows, no_filter), MissingData);

    FitSpec wrong_obs;
    wrong_obs.observable = "parity";
    CHECK_THROWS_AS(run_fit(rows, wrong_obs), MissingData);

    FitSpec bad_col;
    bad_col.where = {{"voltage", 1.0}};
    CHECK_THROWS_AS(run_fit(rows, bad_col), ConfigError);

    // A zero uncertainty anywhere drops the fit to unit weights.
    std::vector<ResultRow> unweighted = rows;
    unweighted[0].stderr_value = 0.0;
    json rep2 = run_fit(unweighted, spec);
    CHECK(rep2["fit"]["weighted"] == false);
    std::vector<DataPoint> unit = pts;
    for (auto& p : unit) p.sigma = 1.0;
    CHECK(rep2["fit"]["b"].get<double>() ==
          fit_scaling(unit).b);
}

TEST_CASE("crossover mode chains per-rate fits into the power law") {
    std::vector<ResultRow> rows;
    for (double gamma : {0.25, 0.5, 1.0}) {
        double C = gamma / 10.0;  // crossover size 10 / gamma
        for (int L : {8, 12, 16, 24, 32, 48, 64, 96})
            rows.push_back(
                scaling_row(L, gamma, curve(2.0, C, 1.0, L), 0.01));
    }
    FitSpec spec;
    spec.mode = FitSpec::Mode::Crossover;
    spec.fix_b = 1.0;
    json rep = run_fit(rows, spec);
    REQUIRE(rep["per_gamma"].size() == 3);
    for (const auto& entry : rep["per_gamma"])
        CHECK(entry.contains("fit"));
    CHECK(rep["per_gamma"][0]["fit"]["L0"].get<double>() ==
          doctest::Approx(40.0).epsilon(1e-6));
    CHECK(rep["crossover_power_law"]["exponent"].get<double>() ==
          doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(rep["crossover_power_law"]["n_used"] == 3);
}

TEST_CASE("lorentzian scan recovers the parameter trends") {
    std::vector<ResultRow> rows;
    const std::vector<double> gammas = {0.01, 0.03, 0.1, 0.3, 1.0, 3.0};
    for (int L : {8, 16, 32, 64}) {
        double K = 2.0 * L, Q = 0.5 * L * L;
        for (double g : gammas) {
            ResultRow r = scaling_row(L, g, K / (1.0 + Q * std::pow(g, 1.5)),
                                      1e-4);
            rows.push_back(r);
        }
    }
    FitSpec spec;
    spec.mode = FitSpec::Mode::LorentzianScan;
    json rep = run_fit(rows, spec);
    REQUIRE(rep["per_size"].size() == 4);
    CHECK(rep["per_size"][0]["fit"]["beta"].get<double>() ==
          doctest::Approx(1.5).epsilon(1e-6));
    CHECK(rep["scalings"]["x"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-3));
    CHECK(rep["scalings"]["y"].get<double>() ==
          doctest::Approx(2.0).epsilon(1e-3));
    CHECK(std::abs(rep["scalings"]["beta_slope"].get<double>()) < 1e-6);
}

}  // TEST_SUITE("orchestrator")
