#include "ftraj/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "ftraj/bdg.hpp"
#include "ftraj/ed.hpp"
#include "ftraj/errors.hpp"
#include "ftraj/fitting.hpp"
#include "ftraj/ladder.hpp"
#include "ftraj/observable.hpp"
#include "ftraj/slater.hpp"

namespace ftraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << content;
        if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string point_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%04d", index);
    return buf;
}

std::string point_context(const SweepPoint& point) {
    std::string ctx = "point " + std::to_string(point.index);
    if (!point.overrides.empty()) {
        ctx += " (";
        bool first = true;
        for (auto it = point.overrides.begin(); it != point.overrides.end();
             ++it) {
            if (!first) ctx += ", ";
            first = false;
            ctx += it.key() + "=" + it.value().dump();
        }
        ctx += ")";
    }
    return ctx;
}

// Schedule + averaging plan for one point. The ladder protocol is
// cycle-driven: one step per cycle, steady window = the tail cycles.
void plan_point(const ModelConfig& m, const StepSchedule& base,
                StepSchedule& sched, EnsembleOptions& opt) {
    if (m.name == "ladder") {
        sched.dt = 1.0;
        sched.t_f = static_cast<double>(m.ladder.n_steady + m.ladder.tail);
        sched.t0 = static_cast<double>(m.ladder.n_steady);
        sched.sample_stride = 1;
        opt.tail_mean = true;
        opt.tail_samples = m.ladder.tail;
    } else {
        sched = base;
        opt.tail_mean = false;
    }
}

EngineFactory make_factory(const ModelConfig& m, double dt) {
    if (m.name == "tight-binding")
        return [m, dt](std::uint64_t, NoiseStream&) {
            return std::make_unique<TightBindingEngine>(m.L, m.J, m.gamma,
                                                        dt);
        };
    if (m.name == "kitaev") {
        if (m.alpha) {
            double alpha = *m.alpha;
            return [m, alpha, dt](std::uint64_t, NoiseStream&) {
                return std::make_unique<KitaevLongRangeEngine>(
                    m.L, m.J, m.h, m.gamma, alpha, dt);
            };
        }
        return [m, dt](std::uint64_t, NoiseStream&) {
            return std::make_unique<KitaevOnsiteEngine>(m.L, m.J, m.h,
                                                        m.gamma, dt);
        };
    }
    if (m.name == "tv-chain")
        return [m, dt](std::uint64_t, NoiseStream&) {
            return std::make_unique<ManyBodyEngine>(
                make_tv_engine(m.L, m.t, m.W, m.V, m.gamma, dt));
        };
    if (m.name == "syk") {
        SykCouplings couplings =
            sample_syk_couplings(m.L, m.J, m.coupling_seed);
        return [m, dt, couplings = std::move(couplings)](std::uint64_t,
                                                         NoiseStream&) {
            return std::make_unique<ManyBodyEngine>(
                make_syk_engine(couplings, m.gamma, dt));
        };
    }
    if (m.name == "ladder")
        return [m](std::uint64_t, NoiseStream& stream) {
            return std::make_unique<LadderEngine>(m.ladder, m.L, stream);
        };
    throw ConfigError("unknown model '" + m.name + "'");
}

ResultRow base_row(const RunConfig& cfg, const ModelConfig& m) {
    ResultRow r;
    r.model = m.name;
    r.L = m.L;
    if (m.name == "tight-binding") {
        r.J = m.J;
        r.gamma = m.gamma;
    } else if (m.name == "kitaev") {
        r.J = m.J;
        r.h = m.h;
        if (m.alpha) r.alpha = *m.alpha;
        r.gamma = m.gamma;
    } else if (m.name == "tv-chain") {
        r.t = m.t;
        r.W = m.W;
        r.V = m.V;
        r.gamma = m.gamma;
    } else if (m.name == "syk") {
        r.J = m.J;
        r.gamma = m.gamma;
        r.coupling_seed = static_cast<long long>(m.coupling_seed);
    } else {  // ladder
        r.t1 = m.ladder.t1;
        r.t2 = m.ladder.t2;
        r.t12 = m.ladder.t12;
        r.p1 = m.ladder.p1;
        r.p2 = m.ladder.p2;
        r.tau_u = m.ladder.tau_u;
    }
    r.n_traj = cfg.n_traj;
    r.master_seed = cfg.master_seed;
    r.config_hash = cfg.hash;
    return r;
}

void write_series_file(const fs::path& path, const EnsembleResult& ens) {
    std::ostringstream out;
    out << "t";
    for (const auto& name : ens.observables)
        out << ',' << name << ',' << name << "_stderr";
    out << '\n';
    for (std::size_t s = 0; s < ens.times.size(); ++s) {
        out << fmt17(ens.times[s]);
        for (std::size_t o = 0; o < ens.observables.size(); ++o)
            out << ',' << fmt17(ens.mean_series[o][s]) << ','
                << fmt17(ens.stderr_series[o][s]);
        out << '\n';
    }
    atomic_write(path, out.str());
}

json steady_json(const EnsembleRun& run) {
    json arr = json::array();
    for (const auto& st : run.steady) {
        json e;
        e["name"] = st.name;
        e["value"] = st.value;
        e["stderr"] = st.stderr;
        e["drift_slope"] = st.drift_slope;
        e["drift_relative"] = st.drift_relative;
        e["drift_flagged"] = st.drift_flagged;
        arr.push_back(e);
    }
    return arr;
}

std::vector<ResultRow> rows_from_steady(const RunConfig& cfg,
                                        const ModelConfig& m,
                                        const json& steady, double t0,
                                        double tf) {
    std::vector<ResultRow> rows;
    for (const auto& st : steady) {
        ResultRow r = base_row(cfg, m);
        r.observable = st.at("name").get<std::string>();
        r.steady_value = st.at("value").get<double>();
        r.stderr_value = st.at("stderr").get<double>();
        r.t0 = t0;
        r.tf = tf;
        rows.push_back(std::move(r));
    }
    return rows;
}

json load_point_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw CorruptCheckpoint("checkpoint marks a point done but " +
                                path.string() + " is missing");
    try {
        return json::parse(in);
    } catch (const json::parse_error&) {
        throw CorruptCheckpoint(path.string() + " is not valid JSON");
    }
}

json build_manifest(const RunConfig& config,
                    const std::vector<SweepPoint>& points,
                    const std::vector<std::string>& statuses,
                    const std::vector<std::string>& errors) {
    json m;
    m["tool"] = "ftraj";
    m["format_version"] = 1;
    m["noise_algorithm"] = kNoiseAlgorithmTag;
    m["config_hash"] = config.hash;
    m["config"] = config.canonical;
    m["n_points"] = points.size();
    json arr = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        json p;
        p["index"] = points[i].index;
        p["overrides"] = points[i].overrides;
        p["status"] = statuses[i];
        p["error"] = errors[i];
        arr.push_back(p);
    }
    m["points"] = arr;
    return m;
}

void write_results_csv(const fs::path& dir,
                       const std::vector<std::vector<ResultRow>>& rows) {
    std::ostringstream out;
    out << table_header_line() << '\n';
    for (const auto& point_rows : rows)
        for (const auto& r : point_rows) out << table_row_line(r) << '\n';
    atomic_write(dir / "results.csv", out.str());
}

}  // namespace

std::string resolve_run_dir(const RunConfig& config) {
    std::string d = config.output.directory;
    if (d.empty())
        throw ConfigError("output: no directory configured for this run");
    fs::path p(d);
    if (p.is_relative()) {
        const char* root = std::getenv("FTRAJ_OUTPUT_ROOT");
        if (root && *root) p = fs::path(root) / p;
    }
    return p.string();
}

EnsembleRun run_point(const ModelConfig& model, const StepSchedule& schedule,
                      const std::vector<std::string>& observables, int n_traj,
                      std::uint64_t seed, int workers) {
    StepSchedule sched;
    EnsembleOptions opt;
    plan_point(model, schedule, sched, opt);
    opt.n_traj = n_traj;
    opt.master_seed = seed;
    opt.workers = workers;
    std::vector<ObservableSpec> specs =
        parse_observables(observables, model.L);
    EngineFactory factory = make_factory(model, sched.dt);
    return run_ensemble(factory, sched, specs, opt);
}

SimulateOutcome simulate(const RunConfig& config,
                         const std::string& resume_dir, int max_points) {
    SimulateOutcome out;
    std::vector<SweepPoint> points = expand_sweep(config);
    out.n_total = static_cast<int>(points.size());

    std::vector<std::string> statuses(points.size(), "pending");
    std::vector<std::string> errors(points.size());

    fs::path dir;
    if (!resume_dir.empty()) {
        dir = resume_dir;
        json manifest = load_manifest(resume_dir);
        const std::string stored =
            manifest.at("config_hash").get<std::string>();
        if (stored != config.hash)
            throw ConfigError(
                "resume refused: configuration hash " + config.hash +
                " does not match the checkpoint's " + stored);
        const json& mpoints = manifest.at("points");
        if (mpoints.size() != points.size())
            throw CorruptCheckpoint(
                "checkpoint point count differs from the configured sweep");
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::string st = mpoints[i].at("status").get<std::string>();
            // Failed points are retried on resume.
            statuses[i] = (st == "done") ? "done" : "pending";
        }
    } else {
        dir = resolve_run_dir(config);
        if (fs::exists(dir / "manifest.json"))
            throw ConfigError(
                dir.string() +
                " already contains a run; pass it as the resume directory");
    }
    fs::create_directories(dir / "points");
    fs::create_directories(dir / "series");
    out.run_dir = dir.string();

    // Rows for already-completed points come from their checkpoint files,
    // so a resumed table is identical to an uninterrupted run.
    std::vector<std::vector<ResultRow>> rows(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (statuses[i] != "done") continue;
        json pf = load_point_file(dir / "points" /
                                  (point_file_name(points[i].index) +
                                   std::string(".json")));
        rows[i] = rows_from_steady(config, points[i].model, pf.at("steady"),
                                   pf.at("t0").get<double>(),
                                   pf.at("tf").get<double>());
        ++out.n_skipped;
    }

    atomic_write(dir / "manifest.json",
                 build_manifest(config, points, statuses, errors).dump(2) +
                     "\n");
    write_results_csv(dir, rows);

    int executed = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (statuses[i] == "done") continue;
        if (max_points > 0 && executed >= max_points) break;
        ++executed;
        const SweepPoint& point = points[i];
        try {
            StepSchedule sched;
            EnsembleOptions opt;
            plan_point(point.model, config.schedule, sched, opt);
            EnsembleRun run =
                run_point(point.model, config.schedule, config.observables,
                          config.n_traj,
                          point_seed(config.master_seed, point.index),
                          config.workers);
            const std::string stem = point_file_name(point.index);
            write_series_file(dir / "series" / (stem + ".csv"),
                              run.ensemble);
            json pf;
            pf["index"] = point.index;
            pf["overrides"] = point.overrides;
            pf["model"] = point.model.name;
            pf["L"] = point.model.L;
            pf["t0"] = sched.window_start();
            pf["tf"] = sched.t_f;
            pf["steady"] = steady_json(run);
            atomic_write(dir / "points" / (stem + ".json"),
                         pf.dump(2) + "\n");
            rows[i] = rows_from_steady(config, point.model, pf["steady"],
                                       sched.window_start(), sched.t_f);
            statuses[i] = "done";
            errors[i].clear();
            ++out.n_done;
        } catch (const std::exception& e) {
            statuses[i] = "failed";
            errors[i] = point_context(point) + ": " + e.what();
            out.failures.push_back(errors[i]);
            ++out.n_failed;
        }
        atomic_write(dir / "manifest.json",
                     build_manifest(config, points, statuses, errors)
                             .dump(2) +
                         "\n");
        write_results_csv(dir, rows);
    }
    return out;
}

json load_manifest(const std::string& run_dir) {
    fs::path path = fs::path(run_dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw CorruptCheckpoint("cannot open " + path.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error&) {
        throw CorruptCheckpoint(path.string() + " is not valid JSON");
    }
    for (const char* key : {"tool", "format_version", "noise_algorithm",
                            "config_hash", "config", "n_points", "points"})
        if (!m.contains(key))
            throw CorruptCheckpoint("manifest is missing key '" +
                                    std::string(key) + "'");
    if (!m["points"].is_array() ||
        m["points"].size() != m["n_points"].get<std::size_t>())
        throw CorruptCheckpoint(
            "manifest point list disagrees with its recorded count");
    for (std::size_t i = 0; i < m["points"].size(); ++i) {
        const json& p = m["points"][i];
        if (!p.is_object() || !p.contains("index") || !p.contains("status") ||
            !p.contains("overrides"))
            throw CorruptCheckpoint("manifest point entry " +
                                    std::to_string(i) + " is malformed");
        if (p["index"].get<std::size_t>() != i)
            throw CorruptCheckpoint("manifest point indices are not 0..n-1");
        const std::string st = p["status"].get<std::string>();
        if (st != "pending" && st != "done" && st != "failed")
            throw CorruptCheckpoint("manifest point " + std::to_string(i) +
                                    " has unknown status '" + st + "'");
    }
    if (!m["config"].is_object())
        throw CorruptCheckpoint("manifest config block is not an object");
    json payload = m["config"];
    payload.erase("output");
    if (config_hash(payload) != m["config_hash"].get<std::string>())
        throw CorruptCheckpoint(
            "recorded hash does not match the stored configuration");
    return m;
}

namespace {

std::optional<double> row_field(const ResultRow& r, const std::string& key) {
    if (key == "L") return static_cast<double>(r.L);
    if (key == "J") return r.J;
    if (key == "t") return r.t;
    if (key == "W") return r.W;
    if (key == "V") return r.V;
    if (key == "h") return r.h;
    if (key == "alpha") return r.alpha;
    if (key == "gamma") return r.gamma;
    if (key == "t1") return r.t1;
    if (key == "t2") return r.t2;
    if (key == "t12") return r.t12;
    if (key == "p1") return r.p1;
    if (key == "p2") return r.p2;
    if (key == "tau_u") return r.tau_u;
    if (key == "coupling_seed")
        return r.coupling_seed < 0
                   ? ResultRow::nan_value()
                   : static_cast<double>(r.coupling_seed);
    return std::nullopt;
}

bool near(double a, double b) {
    return std::abs(a - b) <=
           1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<const ResultRow*> filter_rows(const std::vector<ResultRow>& rows,
                                          const FitSpec& spec) {
    std::vector<const ResultRow*> sel;
    for (const auto& r : rows) {
        if (r.observable != spec.observable) continue;
        bool ok = true;
        for (const auto& [key, want] : spec.where) {
            std::optional<double> have = row_field(r, key);
            if (!have)
                throw ConfigError("fit: unknown filter column '" + key + "'");
            if (std::isnan(*have) || !near(*have, want)) {
                ok = false;
                break;
            }
        }
        if (ok) sel.push_back(&r);
    }
    if (sel.empty())
        throw MissingData("fit: no rows match observable '" +
                          spec.observable + "' and the given filters");
    return sel;
}

// Axis points from rows, one per distinct axis value; duplicated axis
// values mean the caller forgot a filter.
std::vector<DataPoint> axis_points(const std::vector<const ResultRow*>& sel,
                                   const std::string& axis, bool& weighted) {
    std::map<double, const ResultRow*> seen;
    for (const ResultRow* r : sel) {
        double x = axis == "L" ? static_cast<double>(r->L) : r->gamma;
        auto [it, inserted] = seen.emplace(x, r);
        if (!inserted)
            throw MissingData("fit: multiple rows share " + axis + " = " +
                              fmt17(x) +
                              "; add filters to select one sweep line");
    }
    weighted = true;
    for (const auto& [x, r] : seen)
        if (!(r->stderr_value > 0.0)) weighted = false;
    std::vector<DataPoint> pts;
    for (const auto& [x, r] : seen)
        pts.push_back(
            {x, r->steady_value, weighted ? r->stderr_value : 1.0});
    return pts;
}

json matrix_json(const Eigen::Matrix3d& m) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        json row = json::array();
        for (int j = 0; j < 3; ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Volume: return "volume";
        case Regime::Subvolume: return "subvolume";
        case Regime::Area: return "area";
        default: return "undetermined";
    }
}

json scaling_report(const ScalingFit& fit, const std::vector<DataPoint>& pts,
                    bool weighted) {
    json rep;
    rep["A"] = fit.A;
    rep["C"] = fit.C;
    rep["b"] = fit.b;
    rep["b_fixed"] = fit.b_fixed;
    rep["b_unconstrained"] = fit.b_unconstrained;
    rep["stderr"] = {{"A", std::sqrt(std::max(fit.covariance(0, 0), 0.0))},
                     {"C", std::sqrt(std::max(fit.covariance(1, 1), 0.0))},
                     {"b", std::sqrt(std::max(fit.covariance(2, 2), 0.0))}};
    rep["covariance"] = matrix_json(fit.covariance);
    rep["residual_norm"] = fit.residual_norm;
    rep["L0"] = std::isfinite(fit.L0) ? json(fit.L0) : json("inf");
    rep["reliable"] = fit.reliable;
    rep["regime"] = regime_name(fit.regime);
    rep["log_area_ambiguous"] = fit.log_area_ambiguous;
    rep["n_points"] = pts.size();
    rep["weighted"] = weighted;
    return rep;
}

json lorentzian_report(const LorentzianFit& fit,
                       const std::vector<DataPoint>& pts, bool weighted) {
    json rep;
    rep["K"] = fit.K;
    rep["Q"] = fit.Q;
    rep["beta"] = fit.beta;
    rep["stderr"] = {{"K", std::sqrt(std::max(fit.covariance(0, 0), 0.0))},
                     {"Q", std::sqrt(std::max(fit.covariance(1, 1), 0.0))},
                     {"beta",
                      std::sqrt(std::max(fit.covariance(2, 2), 0.0))}};
    rep["covariance"] = matrix_json(fit.covariance);
    rep["residual_norm"] = fit.residual_norm;
    rep["n_points"] = pts.size();
    rep["weighted"] = weighted;
    return rep;
}

void write_scaling_curve(const std::string& path, const ScalingFit& fit,
                         const std::vector<DataPoint>& pts) {
    std::ostringstream out;
    out << "kind,x,y,stderr,fitted,asymptote_linear,asymptote_power\n";
    for (const auto& p : pts)
        out << "data," << fmt17(p.x) << ',' << fmt17(p.y) << ','
            << fmt17(p.sigma) << ',' << fmt17(scaling_value(fit, p.x))
            << ",,\n";
    double lo = pts.front().x, hi = pts.front().x;
    for (const auto& p : pts) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    lo *= 0.8;
    hi *= 1.25;
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
        double x = lo * std::pow(hi / lo, static_cast<double>(i) / n);
        double linear = fit.A * x;
        double power = fit.C > 0.0
                           ? (fit.A / fit.C) * std::pow(x, 1.0 - fit.b)
                           : std::numeric_limits<double>::quiet_NaN();
        out << "curve," << fmt17(x) << ",,," << fmt17(scaling_value(fit, x))
            << ',' << fmt17(linear) << ','
            << (std::isfinite(power) ? fmt17(power) : "") << '\n';
    }
    atomic_write(path, out.str());
}

void write_lorentzian_curve(const std::string& path, const LorentzianFit& fit,
                            const std::vector<DataPoint>& pts) {
    std::ostringstream out;
    out << "kind,gamma,y,stderr,fitted,plateau,tail\n";
    for (const auto& p : pts)
        out << "data," << fmt17(p.x) << ',' << fmt17(p.y) << ','
            << fmt17(p.sigma) << ',' << fmt17(lorentzian_value(fit, p.x))
            << ",,\n";
    double lo = pts.front().x, hi = pts.front().x;
    for (const auto& p : pts) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
    }
    lo *= 0.8;
    hi *= 1.25;
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
        double x = lo * std::pow(hi / lo, static_cast<double>(i) / n);
        double tail = fit.Q > 0.0
                          ? (fit.K / fit.Q) * std::pow(x, -fit.beta)
                          : std::numeric_limits<double>::quiet_NaN();
        out << "curve," << fmt17(x) << ",,," << fmt17(lorentzian_value(fit, x))
            << ',' << fmt17(fit.K) << ','
            << (std::isfinite(tail) ? fmt17(tail) : "") << '\n';
    }
    atomic_write(path, out.str());
}

}  // namespace

json run_fit(const std::vector<ResultRow>& rows, const FitSpec& spec) {
    std::vector<const ResultRow*> sel = filter_rows(rows, spec);
    json rep;
    rep["observable"] = spec.observable;
    json filters = json::object();
    for (const auto& [k, v] : spec.where) filters[k] = v;
    rep["filters"] = filters;

    if (spec.mode == FitSpec::Mode::Scaling) {
        rep["mode"] = "scaling";
        bool weighted = false;
        std::vector<DataPoint> pts = axis_points(sel, "L", weighted);
        ScalingFit fit = fit_scaling(pts, spec.fix_b);
        rep["fit"] = scaling_report(fit, pts, weighted);
        if (!spec.out_prefix.empty())
            write_scaling_curve(spec.out_prefix + "_scaling.csv", fit, pts);
        return rep;
    }

    if (spec.mode == FitSpec::Mode::Lorentzian) {
        rep["mode"] = "lorentzian";
        bool weighted = false;
        std::vector<DataPoint> pts = axis_points(sel, "gamma", weighted);
        LorentzianFit fit = fit_lorentzian(pts);
        rep["fit"] = lorentzian_report(fit, pts, weighted);
        if (!spec.out_prefix.empty())
            write_lorentzian_curve(spec.out_prefix + "_lorentzian.csv", fit,
                                   pts);
        return rep;
    }

    if (spec.mode == FitSpec::Mode::Crossover) {
        rep["mode"] = "crossover";
        std::map<double, std::vector<const ResultRow*>> groups;
        for (const ResultRow* r : sel) {
            if (std::isnan(r->gamma))
                throw MissingData("fit: crossover mode needs a gamma column");
            groups[r->gamma].push_back(r);
        }
        json per_gamma = json::array();
        std::vector<DataPoint> l0pts;
        for (const auto& [g, group] : groups) {
            json entry;
            entry["gamma"] = g;
            try {
                bool weighted = false;
                std::vector<DataPoint> pts =
                    axis_points(group, "L", weighted);
                ScalingFit fit = fit_scaling(pts, spec.fix_b);
                entry["fit"] = scaling_report(fit, pts, weighted);
                if (std::isfinite(fit.L0)) l0pts.push_back({g, fit.L0, 1.0});
            } catch (const Error& e) {
                entry["error"] = e.what();
            }
            per_gamma.push_back(entry);
        }
        rep["per_gamma"] = per_gamma;
        PowerLawFit pl = fit_L0_powerlaw(l0pts, spec.gamma_max, 500, 0);
        rep["crossover_power_law"] = {
            {"exponent", pl.exponent},
            {"exponent_stderr", pl.exponent_stderr},
            {"intercept", pl.intercept},
            {"ci_low", pl.ci_low},
            {"ci_high", pl.ci_high},
            {"n_used", pl.n_used}};
        if (!spec.out_prefix.empty()) {
            std::ostringstream out;
            out << "kind,gamma,L0,fitted\n";
            for (const auto& p : l0pts)
                out << "data," << fmt17(p.x) << ',' << fmt17(p.y) << ",\n";
            for (const auto& p : l0pts)
                out << "curve," << fmt17(p.x) << ",,"
                    << fmt17(std::exp(pl.intercept) *
                             std::pow(p.x, pl.exponent))
                    << '\n';
            atomic_write(spec.out_prefix + "_crossover.csv", out.str());
        }
        return rep;
    }

    // LorentzianScan: per-size Lorentzians, then parameter scalings.
    rep["mode"] = "lorentzian-scan";
    std::map<int, std::vector<const ResultRow*>> groups;
    for (const ResultRow* r : sel) groups[r->L].push_back(r);
    json per_size = json::array();
    std::vector<DataPoint> kpts, qpts, bpts;
    for (const auto& [L, group] : groups) {
        json entry;
        entry["L"] = L;
        try {
            bool weighted = false;
            std::vector<DataPoint> pts =
                axis_points(group, "gamma", weighted);
            LorentzianFit fit = fit_lorentzian(pts);
            entry["fit"] = lorentzian_report(fit, pts, weighted);
            auto sigma_of = [&](int i) {
                return std::max(
                    std::sqrt(std::max(fit.covariance(i, i), 0.0)), 1e-12);
            };
            kpts.push_back(
                {static_cast<double>(L), fit.K, sigma_of(0)});
            qpts.push_back(
                {static_cast<double>(L), fit.Q, sigma_of(1)});
            bpts.push_back(
                {static_cast<double>(L), fit.beta, sigma_of(2)});
        } catch (const Error& e) {
            entry["error"] = e.what();
        }
        per_size.push_back(entry);
    }
    rep["per_size"] = per_size;
    ParameterScalings ps = fit_parameter_scalings(kpts, qpts, bpts);
    rep["scalings"] = {{"m", ps.m},
                       {"x", ps.x},
                       {"k", ps.k},
                       {"x_stderr", ps.x_stderr},
                       {"y", ps.y},
                       {"q", ps.q},
                       {"y_stderr", ps.y_stderr},
                       {"beta_slope", ps.beta_slope},
                       {"beta_slope_stderr", ps.beta_slope_stderr}};
    if (!spec.out_prefix.empty()) {
        std::ostringstream out;
        out << "L,K,K_stderr,K_fit,Q,Q_stderr,Q_fit,beta,beta_stderr\n";
        for (std::size_t i = 0; i < kpts.size(); ++i) {
            double L = kpts[i].x;
            out << fmt17(L) << ',' << fmt17(kpts[i].y) << ','
                << fmt17(kpts[i].sigma) << ','
                << fmt17(ps.m * std::pow(L, ps.x) + ps.k) << ','
                << fmt17(qpts[i].y) << ',' << fmt17(qpts[i].sigma) << ','
                << fmt17(std::exp(ps.q) * std::pow(L, ps.y)) << ','
                << fmt17(bpts[i].y) << ',' << fmt17(bpts[i].sigma) << '\n';
        }
        atomic_write(spec.out_prefix + "_parameters.csv", out.str());
    }
    return rep;
}

json summarize_run(const std::string& run_dir) {
    json manifest = load_manifest(run_dir);
    json rep;
    rep["run_dir"] = run_dir;
    rep["config_hash"] = manifest["config_hash"];
    rep["model"] = manifest["config"]["model"]["model"];
    int done = 0, failed = 0, pending = 0;
    json failures = json::array();
    for (const auto& p : manifest["points"]) {
        const std::string st = p["status"].get<std::string>();
        if (st == "done") ++done;
        else if (st == "failed") {
            ++failed;
            failures.push_back({{"index", p["index"]},
                                {"error", p.value("error", "")}});
        } else {
            ++pending;
        }
    }
    rep["points"] = {{"total", manifest["points"].size()},
                     {"done", done},
                     {"failed", failed},
                     {"pending", pending}};
    rep["failures"] = failures;

    fs::path csv = fs::path(run_dir) / "results.csv";
    if (fs::exists(csv)) {
        std::vector<ResultRow> rows = read_table_file(csv.string());
        rep["n_rows"] = rows.size();
        std::set<std::string> obs;
        json compact = json::array();
        for (const auto& r : rows) {
            obs.insert(r.observable);
            json e;
            e["model"] = r.model;
            e["L"] = r.L;
            if (!std::isnan(r.gamma)) e["gamma"] = r.gamma;
            if (!std::isnan(r.alpha)) e["alpha"] = r.alpha;
            if (!std::isnan(r.p1)) e["p1"] = r.p1;
            if (!std::isnan(r.p2)) e["p2"] = r.p2;
            e["observable"] = r.observable;
            e["steady_value"] = r.steady_value;
            e["stderr"] = r.stderr_value;
            compact.push_back(e);
        }
        rep["observables"] = json(std::vector<std::string>(obs.begin(),
                                                            obs.end()));
        rep["rows"] = compact;
    }
    return rep;
}

}  // namespace ftraj
