#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftraj/ladder.hpp"
#include "ftraj/schedule.hpp"

namespace ftraj {

// The model block of a run configuration. `name` selects the engine:
//   tight-binding  hopping chain, monitored densities (L, J, gamma)
//   kitaev         hopping + pairing chain (L, J, h, gamma, optional alpha;
//                  alpha absent = onsite pairing, present = long-range)
//   tv-chain       interacting staggered chain (L, t, W, V, gamma)
//   syk            all-to-all complex fermions (L, J, gamma, coupling_seed)
//   ladder         measurement-only two-leg protocol (L rungs + LadderParams)
struct ModelConfig {
    std::string name;
    int L = 0;
    double J = 1.0;
    double t = 1.0;
    double W = 1.0;
    double V = 1.0;
    double h = 0.0;
    std::optional<double> alpha;
    double gamma = 0.0;
    std::uint64_t coupling_seed = 1;
    LadderParams ladder;
};

// Sweep lists: each present dimension replaces the model-block scalar and
// the run covers the cartesian product. A dimension that is present but
// empty yields zero points (empty table, valid manifest). Absent sweep
// block = the single model-block point.
struct SweepConfig {
    std::optional<std::vector<int>> L;
    std::optional<std::vector<double>> gamma;
    std::optional<std::vector<double>> alpha;
    std::optional<std::vector<double>> h;
    std::optional<std::vector<double>> p1;
    std::optional<std::vector<double>> p2;
};

struct OutputConfig {
    std::string directory;
    std::vector<std::string> formats = {"csv", "json"};
};

struct RunConfig {
    ModelConfig model;
    StepSchedule schedule;  // ignored by the ladder protocol (cycle-driven)
    int n_traj = 48;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::vector<std::string> observables;
    SweepConfig sweep;
    OutputConfig output;

    // Normalized form (defaults filled in) and its identity. The hash
    // covers everything that influences numbers -- model, schedule,
    // n_traj, master_seed, observables, sweep -- and excludes the output
    // block and worker count, which only affect where and how fast.
    nlohmann::json canonical;
    std::string hash;
};

// Parse + validate + normalize. Unknown keys anywhere are rejected so
// typos fail loudly. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// SHA-1 (hex) of the canonical hash payload serialized with sorted keys.
std::string config_hash(const nlohmann::json& hash_payload);

// One executed parameter point: the model block with sweep overrides
// applied. `overrides` records only the swept values, for the manifest.
struct SweepPoint {
    int index = 0;
    ModelConfig model;
    nlohmann::json overrides;
};

std::vector<SweepPoint> expand_sweep(const RunConfig& config);

// Seed for one sweep point's trajectory ensemble: a fixed mix of the
// master seed and point index, so results depend on neither execution
// order nor which subset of points runs.
std::uint64_t point_seed(std::uint64_t master_seed, int point_index);

}  // namespace ftraj
