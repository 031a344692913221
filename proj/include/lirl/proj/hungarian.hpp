#pragma once

#include <utility>
#include <vector>

namespace lirl {

struct AssignmentResult {
    std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
    double total = 0.0;
};

// Minimum-cost assignment covering min(rows, cols) cells. Rectangular inputs
// are padded to square with a large sentinel; maximization is the caller's
// job (negate scores). Throws on an empty matrix.
AssignmentResult hungarian(const std::vector<std::vector<double>>& cost);

}  // namespace lirl
