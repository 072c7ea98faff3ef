#pragma once

#include <cmath>

#include "ftraj/errors.hpp"

namespace ftraj {

// Discretization of one stochastic evolution: first-order Trotter steps of
// size dt up to t_f, with observables sampled every sample_stride steps.
// t0 is the start of the steady-state averaging window; when not given it
// defaults to t_f/2, and a drift check on the windowed mean guards against
// windows that start before the transient has died out.
struct StepSchedule {
    double dt = 0.01;
    double t_f = 1.0;
    double t0 = -1.0;  // < 0 means "t_f/2"
    int sample_stride = 1;

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("StepSchedule: dt must be > 0");
        if (!(t_f >= dt)) throw ConfigError("StepSchedule: t_f must be >= dt");
        if (sample_stride < 1)
            throw ConfigError("StepSchedule: sample_stride must be >= 1");
        const double start = window_start();
        if (!(start >= 0.0) || !(start < t_f))
            throw ConfigError("StepSchedule: need 0 <= t0 < t_f");
    }

    int n_steps() const { return static_cast<int>(std::llround(t_f / dt)); }
    int n_samples() const { return n_steps() / sample_stride + 1; }
    double window_start() const { return t0 < 0.0 ? 0.5 * t_f : t0; }
};

}  // namespace ftraj
