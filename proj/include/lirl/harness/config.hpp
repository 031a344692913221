#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lirl/agent/ddpg.hpp"
#include "lirl/core/types.hpp"
#include "lirl/env/env.hpp"

namespace lirl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RobustnessConfig {
    std::vector<double> noise_levels{0.1};
    std::vector<double> failure_probs{0.03};
    int eval_episodes = 30;
};

struct NormEntry {
    NormStats makespan;
    NormStats energy;
};

struct ExperimentConfig {
    int version = 1;
    ProblemScale scale;
    double alpha = 0.5;
    std::vector<std::uint64_t> seeds;
    int episodes = 300;
    int step_limit = Environment::kStepLimit;
    std::string timing = "none";  // "none" | "wall"
    std::string out_dir = "out";
    std::string dispatch_mode = "greedy";  // "greedy" | "exact"
    DisturbanceConfig disturbance;
    AgentConfig agent;
    std::vector<StageTemplate> stages;
    int norm_rollouts = 100;
    std::uint64_t norm_seed = 2026;
    std::map<std::string, NormEntry> norm_stats;  // keyed by scale label
    RobustnessConfig robustness;
    std::string checkpoint;  // optional agent snapshot for evaluate/gantt
};

struct CliOverrides {
    std::optional<std::string> scale;
    std::optional<double> alpha;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::string> out_dir;
};

// Parse, apply overrides, then validate. Parse failures carry file:line:col;
// semantic failures carry the JSON path of the offending value.
ExperimentConfig load_config(const std::string& path, const CliOverrides& overrides = {});

// Same pipeline over an in-memory document, reported under display_name.
ExperimentConfig parse_config(const std::string& text, const CliOverrides& overrides = {},
                              const std::string& display_name = "<config>");

Instance make_instance(const ExperimentConfig& cfg);

// Weights for the active scale: the stored entry when present, otherwise
// regenerated from random rollouts, cached on cfg, and recorded in out_dir.
RewardWeights resolve_weights(ExperimentConfig& cfg);

}  // namespace lirl
