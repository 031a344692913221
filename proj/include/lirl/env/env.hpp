#pragma once

#include <cstdint>
#include <vector>

#include "lirl/core/rng.hpp"
#include "lirl/core/types.hpp"

namespace lirl {

struct DisturbanceConfig {
    double noise_sigma_factor = 0.0;  // sigma = factor * (t_min + 0.5*(t_max - t_min))
    double failure_prob = 0.0;        // per dispatched operation
    double repair_min = 1.5;          // repair = U[repair_min, repair_max] * nominal duration
    double repair_max = 3.0;
    int max_failures = 10;
};

struct NormStats {
    double mean = 0.0;
    double stdev = 1.0;
};

struct RewardWeights {
    double alpha = 0.5;  // weight on makespan vs energy
    NormStats makespan;
    NormStats energy;
};

struct OpEvent {
    int job = 0, stage = 0, robot = 0;
    double start = 0.0, end = 0.0;
    double energy = 0.0;
};

struct RepairEvent {
    int robot = 0;
    double start = 0.0, end = 0.0;
    double nominal = 0.0;  // commanded duration of the failed dispatch
};

struct EpisodeRecord {
    std::vector<OpEvent> ops;
    std::vector<RepairEvent> repairs;
    int violations = 0;
    int steps = 0;
    int failures = 0;
};

struct StepResult {
    double reward = 0.0;
    bool done = false;
    bool violation = false;
};

// Discrete-event simulator: each step dispatches the action's pairs at the
// current clock, then advances time until the next decision point or episode
// end. Rewards are normalized makespan/energy increments that telescope to
// -(alpha * C_norm + (1 - alpha) * E_norm) over the episode.
class Environment {
  public:
    static constexpr int kStepLimit = 500;

    Environment(Instance inst, DisturbanceConfig disturb, RewardWeights weights,
                int step_limit = kStepLimit);

    const State& reset(std::uint64_t seed);
    StepResult step(const HybridAction& a);

    const State& state() const { return state_; }
    const EpisodeRecord& record() const { return record_; }
    const Instance& instance() const { return inst_; }
    const DisturbanceConfig& disturbance() const { return disturb_; }
    const RewardWeights& weights() const { return weights_; }
    bool done() const { return done_; }

    static double duration_of(const std::vector<double>& knots, const StageTemplate& tmpl);
    static double energy_of(double t, const StageTemplate& tmpl);

  private:
    void advance();
    bool all_complete() const;

    Instance inst_;
    DisturbanceConfig disturb_;
    RewardWeights weights_;
    int step_limit_ = kStepLimit;
    State state_;
    EpisodeRecord record_;
    Rng rng_{0};
    bool done_ = true;
};

// Mean and sample std of makespan and total energy over n_rollouts episodes
// of a uniformly random feasible policy on the clean (disturbance-free)
// environment. The alpha field of the result is left at its default.
RewardWeights compute_norm_stats(const Instance& inst, int n_rollouts, std::uint64_t seed);

}  // namespace lirl
