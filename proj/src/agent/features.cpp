#include "lirl/agent/features.hpp"

#include <algorithm>

namespace lirl {

namespace {
constexpr int kOneHotJobLimit = 20;
}

int feature_dim(const ProblemScale& scale) {
    const int per_job = scale.jobs <= kOneHotJobLimit ? ProblemScale::stage_count + 1 : 1;
    return scale.robots * 2 + scale.jobs * per_job + 2;
}

std::vector<float> encode_state(const State& s, const Instance& inst) {
    const auto& scale = inst.scale;
    std::vector<float> f;
    f.reserve(feature_dim(scale));

    double t_ref = 0.0, work_per_job = 0.0;
    for (const auto& st : inst.stages) {
        t_ref = std::max(t_ref, st.t_max());
        work_per_job += st.t_max();
    }
    const double horizon = scale.jobs * work_per_job / scale.robots;

    for (const auto& r : s.robots) {
        const double free_in = r.mode == RobotMode::Idle ? 0.0 : std::max(0.0, r.until - s.clock);
        f.push_back(static_cast<float>(std::min(free_in, t_ref) / t_ref));
        f.push_back(r.mode == RobotMode::Broken ? 1.0f : 0.0f);
    }
    int complete = 0;
    for (int stage : s.job_stage) {
        if (stage >= ProblemScale::stage_count) ++complete;
        if (scale.jobs <= kOneHotJobLimit) {
            for (int c = 0; c <= ProblemScale::stage_count; ++c)
                f.push_back(c == stage ? 1.0f : 0.0f);
        } else {
            f.push_back(static_cast<float>(stage) / ProblemScale::stage_count);
        }
    }
    f.push_back(static_cast<float>(complete) / scale.jobs);
    f.push_back(static_cast<float>(std::min(1.0, s.clock / horizon)));
    return f;
}

}  // namespace lirl
