#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftraj/config.hpp"
#include "ftraj/ensemble.hpp"
#include "ftraj/table.hpp"

namespace ftraj {

// Where a run lives: the configured directory, resolved against the
// FTRAJ_OUTPUT_ROOT environment variable when it is relative. Throws
// ConfigError when no directory is configured.
std::string resolve_run_dir(const RunConfig& config);

struct SimulateOutcome {
    std::string run_dir;
    int n_total = 0;
    int n_done = 0;     // completed this call
    int n_skipped = 0;  // already done in the checkpoint
    int n_failed = 0;
    std::vector<std::string> failures;  // one message per failed point
};

// Execute the configured sweep, writing manifest.json, per-point series
// and steady files, and results.csv into the run directory. A failed
// point is recorded in the manifest and does not abort the others.
//
// With `resume_dir` set, continues the checkpoint found there: the
// current config's hash must equal the recorded one (refused otherwise),
// finished points are skipped, and the completed table is identical to an
// uninterrupted run. `max_points` > 0 stops after that many points have
// been executed in this call (the checkpoint stays resumable).
SimulateOutcome simulate(const RunConfig& config,
                         const std::string& resume_dir = "",
                         int max_points = -1);

// Build the engine ensemble for one parameter point and run it. The seed
// is the point-level ensemble seed (see point_seed).
EnsembleRun run_point(const ModelConfig& model, const StepSchedule& schedule,
                      const std::vector<std::string>& observables, int n_traj,
                      std::uint64_t seed, int workers);

// Read + validate a checkpoint manifest. Throws CorruptCheckpoint when
// the file is unreadable, structurally wrong, or internally inconsistent
// (the recorded hash must match the stored configuration).
nlohmann::json load_manifest(const std::string& run_dir);

// Front door to the fitting layer, working off result-table rows.
struct FitSpec {
    enum class Mode {
        Scaling,        // steady value vs L at one parameter point
        Lorentzian,     // steady value vs gamma at one size
        Crossover,      // scaling fit per gamma, then L0 vs gamma power law
        LorentzianScan  // Lorentzian per size, then parameter scalings
    };
    Mode mode = Mode::Scaling;
    std::string observable = "entropy:half";
    std::optional<double> fix_b;
    std::map<std::string, double> where;  // equality filters on columns
    double gamma_max = std::numeric_limits<double>::infinity();
    // When non-empty, plot-ready CSVs are written under this path prefix.
    std::string out_prefix;
};

// Runs the requested fit pipeline and returns the report. Throws
// MissingData when the table lacks the observable or axis, and propagates
// the fitting module's errors.
nlohmann::json run_fit(const std::vector<ResultRow>& rows,
                       const FitSpec& spec);

// Consolidated view of a run directory: configuration identity, point
// statuses, and the steady-state table.
nlohmann::json summarize_run(const std::string& run_dir);

}  // namespace ftraj
