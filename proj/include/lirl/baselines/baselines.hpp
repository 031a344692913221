#pragma once

#include <cstdint>
#include <vector>

#include "lirl/agent/ddpg.hpp"
#include "lirl/env/env.hpp"

namespace lirl {

// One stage's pre-committed knots and the resulting nominal duration: the
// hierarchical baselines fix the physical layer first, then only dispatch.
struct FixedVelocityPlan {
    std::vector<double> knots;
    double duration = 0.0;
};

enum class BaselineKind { EnergyOpt, TimeOpt };
enum class DispatchMode { Greedy, Exact };

// Duration target sqrt(a/b) clamped into [t_min, t_max], realized as uniform
// knots and projected into the stage region.
FixedVelocityPlan energy_opt_plan(const StageTemplate& tmpl);

// The knot-box top corner projected into the stage region.
FixedVelocityPlan time_opt_plan(const StageTemplate& tmpl);

std::vector<FixedVelocityPlan> build_plan(const Instance& inst, BaselineKind kind);

struct BaselineRun {
    EpisodeStats stats;
    EpisodeRecord record;
};

// Greedy: per decision epoch, a matching of idle robots to ready operations
// minimizing the total completion-time increment. Exact: branch and bound
// over active dispatch sequences (J <= 6, K <= 3, clean environment only).
BaselineRun dispatch_schedule(Environment& env, const std::vector<FixedVelocityPlan>& plan,
                              DispatchMode mode, std::uint64_t seed);

}  // namespace lirl
