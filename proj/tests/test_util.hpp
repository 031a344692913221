#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lirl/core/types.hpp"
#include "lirl/env/env.hpp"

namespace lirl::test {

inline StageTemplate make_stage(std::string name, std::vector<double> base, double a,
                                double b, double c, double lo, double hi,
                                std::vector<CouplingRow> rows = {}) {
    StageTemplate t;
    t.name = std::move(name);
    t.base_seg = std::move(base);
    t.energy_a = a;
    t.energy_b = b;
    t.energy_c = c;
    t.knot_min = lo;
    t.knot_max = hi;
    t.coupling = std::move(rows);
    return t;
}

// Fixed fixture physics for tests; independent of the shipped config.
inline std::vector<StageTemplate> default_stages() {
    return {
        make_stage("place_bottom_shell", {2.0, 2.0, 2.0}, 200.0, 2.0, 10.0, 0.5, 2.0,
                   {{{1.0, 1.0, 0.0}, 3.5}}),
        make_stage("small_gear_assembly", {1.5, 2.5, 2.0}, 150.0, 3.0, 8.0, 0.5, 2.0,
                   {{{1.0, 0.0, 1.0}, 3.4}}),
        make_stage("large_gear_assembly", {2.5, 3.0, 2.5}, 300.0, 2.5, 12.0, 0.5, 2.0,
                   {{{0.0, 1.0, 1.0}, 3.6}}),
        make_stage("place_top_shell", {2.0, 1.5, 1.5}, 120.0, 4.0, 6.0, 0.5, 2.0,
                   {{{1.0, 1.0, 0.0}, 3.5}}),
        make_stage("move_to_buffer", {1.0, 1.5, 1.0}, 60.0, 5.0, 4.0, 0.5, 2.0,
                   {{{0.0, 1.0, 1.0}, 3.5}}),
    };
}

inline Instance default_instance(int jobs, int robots) {
    Instance inst;
    inst.scale.jobs = jobs;
    inst.scale.robots = robots;
    inst.scale.label = "J" + std::to_string(jobs) + "R" + std::to_string(robots);
    inst.stages = default_stages();
    return inst;
}

// Identity normalization: rewards read directly as -(alpha*dC + (1-alpha)*dE).
inline RewardWeights raw_weights(double alpha = 0.5) {
    RewardWeights w;
    w.alpha = alpha;
    w.makespan = {0.0, 1.0};
    w.energy = {0.0, 1.0};
    return w;
}

}  // namespace lirl::test
