#pragma once

#include <vector>

#include "lirl/core/types.hpp"

namespace lirl {

// Per robot: time-to-free (clipped, normalized) and a broken flag. Per job:
// next-stage one-hot over 6 slots, or a stage/5 scalar when jobs > 20. Plus
// fraction of jobs complete and normalized clock. Everything lands in [0, 1].
int feature_dim(const ProblemScale& scale);

std::vector<float> encode_state(const State& s, const Instance& inst);

}  // namespace lirl
