#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ftraj/noise.hpp"
#include "ftraj/observable.hpp"
#include "ftraj/schedule.hpp"

namespace ftraj {

// One trajectory engine: holds the stochastic state and knows how to apply
// one composite Trotter step (unitary factor then measurement factor then
// re-normalization) drawing whatever noise it needs from the stream.
class Engine {
  public:
    virtual ~Engine() = default;
    // One composite step; must leave the engine's invariants satisfied.
    virtual void advance(NoiseStream& noise) = 0;
    // Evaluate observables on the current state.
    virtual void observe(std::span<const ObservableSpec> what,
                         std::span<double> out) const = 0;
};

struct TrajectoryResult {
    std::vector<double> times;
    // values[obs][sample]
    std::vector<std::vector<double>> values;
};

struct EnsembleResult {
    std::vector<double> times;
    std::vector<std::string> observables;
    // [obs][sample]
    std::vector<std::vector<double>> mean_series;
    std::vector<std::vector<double>> stderr_series;
    int n_traj = 0;
};

struct SteadyValue {
    double value = 0.0;
    double stderr = 0.0;
};

// Steady-state summary for one observable: the time average over [t0, t_f]
// per trajectory, then mean and standard error over trajectories. The drift
// fields report an OLS line fitted to the ensemble mean inside the window so
// configs with too-early t0 are flagged rather than silently averaged.
struct SteadyObservable {
    std::string name;
    double value = 0.0;
    double stderr = 0.0;
    double drift_slope = 0.0;
    double drift_relative = 0.0;  // |slope|*(tf-t0)/max(|value|,eps)
    bool drift_flagged = false;
};

struct EnsembleRun {
    EnsembleResult ensemble;
    std::vector<SteadyObservable> steady;
};

// Samples at step 0 and then every sample_stride steps.
TrajectoryResult run_trajectory(Engine& engine, const StepSchedule& schedule,
                                NoiseStream& stream,
                                std::span<const ObservableSpec> observables);

// Mean and standard error per time point; standard error is the sample RMS
// deviation (ddof = 1) divided by sqrt(N_r). Throws MismatchedGrids unless
// all series share one grid.
EnsembleResult ensemble_average(const std::vector<TrajectoryResult>& series_set,
                                std::span<const ObservableSpec> observables);

// Trapezoidal time average of the ensemble mean over samples in [t0, tf].
// The uncertainty is the same trapezoidal average of the stderr series --
// conservative, since neighboring times are strongly correlated.
SteadyValue steady_state_average(const EnsembleResult& result, int obs_index,
                                 double t0, double tf);

// The factory may draw initialization randomness from the trajectory's own
// stream (the runner then keeps drawing step noise from the same stream).
using EngineFactory =
    std::function<std::unique_ptr<Engine>(std::uint64_t traj_index,
                                          NoiseStream& stream)>;

struct EnsembleOptions {
    int n_traj = 48;
    std::uint64_t master_seed = 0;
    int workers = 1;
    // Steady averaging: trapezoidal window [t0, t_f] by default; tail_mean
    // instead averages the last tail_samples sampled points (ladder protocol).
    bool tail_mean = false;
    int tail_samples = 5;
    double drift_threshold = 0.05;
};

EnsembleRun run_ensemble(const EngineFactory& factory,
                         const StepSchedule& schedule,
                         std::span<const ObservableSpec> observables,
                         const EnsembleOptions& options);

}  // namespace ftraj
