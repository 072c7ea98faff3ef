#include "ftraj/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace ftraj {

namespace {

int parse_cut(const std::string& arg, int L) {
    if (arg == "half") return L / 2;
    if (arg == "quarter") return L / 4;
    try {
        return std::stoi(arg);
    } catch (const std::exception&) {
        throw ConfigError("bad entropy cut '" + arg + "'");
    }
}

}  // namespace

ObservableSpec parse_observable(const std::string& name, int L) {
    ObservableSpec spec;
    spec.name = name;
    const auto colon = name.find(':');
    const std::string head = name.substr(0, colon);
    const std::string arg =
        colon == std::string::npos ? std::string() : name.substr(colon + 1);
    if (head == "entropy") {
        spec.kind = ObservableSpec::Kind::EntropyCut;
        spec.index = arg.empty() ? L / 2 : parse_cut(arg, L);
        if (spec.index < 1 || spec.index >= L)
            throw ConfigError("entropy cut out of range in '" + name + "'");
    } else if (head == "n") {
        spec.kind = ObservableSpec::Kind::Density;
        spec.index = arg.empty() ? 1 : parse_cut(arg, L);
        if (spec.index < 1 || spec.index > L)
            throw ConfigError("density site out of range in '" + name + "'");
    } else if (head == "ln_ipr") {
        spec.kind = ObservableSpec::Kind::LnIpr;
    } else if (head == "parity") {
        spec.kind = ObservableSpec::Kind::Parity;
    } else if (head == "negativity" || head == "fln") {
        spec.kind = ObservableSpec::Kind::Negativity;
        spec.index = arg.empty() ? L / 2 : parse_cut(arg, L);
        if (spec.index < 1 || spec.index >= L)
            throw ConfigError("negativity cut out of range in '" + name + "'");
    } else {
        throw ConfigError("unknown observable '" + name + "'");
    }
    return spec;
}

std::vector<ObservableSpec> parse_observables(
    const std::vector<std::string>& names, int L) {
    std::vector<ObservableSpec> specs;
    specs.reserve(names.size());
    for (const auto& n : names) specs.push_back(parse_observable(n, L));
    return specs;
}

TrajectoryResult run_trajectory(Engine& engine, const StepSchedule& schedule,
                                NoiseStream& stream,
                                std::span<const ObservableSpec> observables) {
    schedule.validate();
    const int n_steps = schedule.n_steps();
    const int stride = schedule.sample_stride;
    const std::size_t n_obs = observables.size();

    TrajectoryResult res;
    res.values.resize(n_obs);
    const int n_samples = schedule.n_samples();
    res.times.reserve(n_samples);
    for (auto& v : res.values) v.reserve(n_samples);

    std::vector<double> row(n_obs);
    auto sample = [&](int step) {
        engine.observe(observables, row);
        res.times.push_back(step * schedule.dt);
        for (std::size_t i = 0; i < n_obs; ++i) res.values[i].push_back(row[i]);
    };

    sample(0);
    for (int step = 1; step <= n_steps; ++step) {
        engine.advance(stream);
        if (step % stride == 0) sample(step);
    }
    return res;
}

EnsembleResult ensemble_average(const std::vector<TrajectoryResult>& series_set,
                                std::span<const ObservableSpec> observables) {
    if (series_set.empty()) throw MismatchedGrids("no trajectories to average");
    const auto& grid = series_set.front().times;
    for (const auto& s : series_set) {
        if (s.times.size() != grid.size() ||
            !std::equal(s.times.begin(), s.times.end(), grid.begin()))
            throw MismatchedGrids("trajectory time grids differ");
    }

    const std::size_t n_obs = series_set.front().values.size();
    const std::size_t n_t = grid.size();
    const int n = static_cast<int>(series_set.size());

    EnsembleResult out;
    out.times = grid;
    out.n_traj = n;
    out.observables.reserve(n_obs);
    for (std::size_t i = 0; i < n_obs && i < observables.size(); ++i)
        out.observables.push_back(observables[i].name);
    out.mean_series.assign(n_obs, std::vector<double>(n_t, 0.0));
    out.stderr_series.assign(n_obs, std::vector<double>(n_t, 0.0));

    for (std::size_t o = 0; o < n_obs; ++o) {
        for (std::size_t t = 0; t < n_t; ++t) {
            double sum = 0.0;
            for (const auto& s : series_set) sum += s.values[o][t];
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto& s : series_set) {
                const double d = s.values[o][t] - mean;
                ss += d * d;
            }
            out.mean_series[o][t] = mean;
            // Sample standard deviation over trajectories / sqrt(N_r).
            out.stderr_series[o][t] =
                n > 1 ? std::sqrt(ss / (n - 1)) / std::sqrt(double(n)) : 0.0;
        }
    }
    return out;
}

namespace {

// Trapezoidal average of y over the samples of `times` falling in [t0, tf].
// Returns false if fewer than two samples are inside the window.
bool window_trapezoid(const std::vector<double>& times,
                      const std::vector<double>& y, double t0, double tf,
                      double* out) {
    const double eps = 1e-12 * std::max(1.0, std::abs(tf));
    std::size_t first = 0;
    while (first < times.size() && times[first] < t0 - eps) ++first;
    std::size_t last = times.size();
    while (last > first && times[last - 1] > tf + eps) --last;
    const std::size_t n = last - first;
    if (n < 2) return false;
    double integral = 0.0;
    for (std::size_t i = first + 1; i < last; ++i)
        integral += 0.5 * (y[i] + y[i - 1]) * (times[i] - times[i - 1]);
    *out = integral / (times[last - 1] - times[first]);
    return true;
}

void ols_line(const std::vector<double>& x, const std::vector<double>& y,
              std::size_t first, std::size_t last, double* slope) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(last - first);
    for (std::size_t i = first; i < last; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    *slope = den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

}  // namespace

SteadyValue steady_state_average(const EnsembleResult& result, int obs_index,
                                 double t0, double tf) {
    if (!(t0 < tf)) throw EmptyWindow("steady_state_average: t0 >= tf");
    SteadyValue sv;
    if (!window_trapezoid(result.times, result.mean_series[obs_index], t0, tf,
                          &sv.value))
        throw EmptyWindow("steady_state_average: fewer than two samples in window");
    window_trapezoid(result.times, result.stderr_series[obs_index], t0, tf,
                     &sv.stderr);
    return sv;
}

EnsembleRun run_ensemble(const EngineFactory& factory,
                         const StepSchedule& schedule,
                         std::span<const ObservableSpec> observables,
                         const EnsembleOptions& options) {
    schedule.validate();
    const int n_traj = options.n_traj;
    std::vector<TrajectoryResult> results(n_traj);

    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto work = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= n_traj) return;
            try {
                NoiseStream stream(options.master_seed,
                                   static_cast<std::uint64_t>(idx));
                auto engine = factory(static_cast<std::uint64_t>(idx), stream);
                results[idx] =
                    run_trajectory(*engine, schedule, stream, observables);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n_traj);  // drain remaining work
                return;
            }
        }
    };

    const int n_workers = std::max(1, std::min(options.workers, n_traj));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    EnsembleRun run;
    run.ensemble = ensemble_average(results, observables);

    const double tf = run.ensemble.times.back();
    const double t0 = schedule.window_start();
    const std::size_t n_obs = observables.size();
    run.steady.resize(n_obs);
    for (std::size_t o = 0; o < n_obs; ++o) {
        auto& st = run.steady[o];
        st.name = std::string(observables[o].name);

        // Per-trajectory window average, then mean/stderr over trajectories.
        std::vector<double> traj_avg;
        traj_avg.reserve(n_traj);
        for (const auto& r : results) {
            double a = 0.0;
            bool ok;
            if (options.tail_mean) {
                const int m = std::min<int>(options.tail_samples,
                                            static_cast<int>(r.times.size()));
                ok = m > 0;
                if (ok) {
                    for (std::size_t i = r.times.size() - m; i < r.times.size();
                         ++i)
                        a += r.values[o][i];
                    a /= m;
                }
            } else {
                ok = window_trapezoid(r.times, r.values[o], t0, tf, &a);
            }
            if (!ok) throw EmptyWindow("steady window holds < 2 samples");
            traj_avg.push_back(a);
        }
        double sum = 0.0;
        for (double a : traj_avg) sum += a;
        st.value = sum / n_traj;
        if (n_traj > 1) {
            double ss = 0.0;
            for (double a : traj_avg) {
                const double d = a - st.value;
                ss += d * d;
            }
            st.stderr = std::sqrt(ss / (n_traj - 1)) / std::sqrt(double(n_traj));
        }

        // Drift check on the ensemble mean inside the window.
        const auto& times = run.ensemble.times;
        const double eps = 1e-12 * std::max(1.0, std::abs(tf));
        std::size_t first = 0;
        while (first < times.size() && times[first] < t0 - eps) ++first;
        if (times.size() - first >= 2) {
            ols_line(times, run.ensemble.mean_series[o], first, times.size(),
                     &st.drift_slope);
            st.drift_relative = std::abs(st.drift_slope) * (tf - t0) /
                                std::max(std::abs(st.value), 1e-12);
            st.drift_flagged = st.drift_relative > options.drift_threshold;
        }
    }
    return run;
}

}  // namespace ftraj
