#pragma once

#include <stdexcept>
#include <vector>

#include "lirl/core/types.hpp"

namespace lirl {

struct QpSolution {
    std::vector<double> x;
    // one multiplier per constraint row, ordered: lower bounds (as -x <= -lo),
    // upper bounds, then coupling rows
    std::vector<double> duals;
    double kkt_residual = 0.0;
    int iterations = 0;
};

struct QpError : std::runtime_error {
    QpError(const std::string& msg, double residual, int iters)
        : std::runtime_error(msg), best_residual(residual), iterations(iters) {}
    double best_residual;
    int iterations;
};

// Euclidean projection of v onto the region polytope. Dual active-set method
// (the Hessian is the identity); regions with more rows than
// kAdmmRowThreshold go through an ADMM splitting pass with an exact polish.
// If v is already feasible (violation <= 1e-12) it is returned unchanged.
// Throws QpError with the best residual when max_iters is exceeded.
inline constexpr int kAdmmRowThreshold = 32;
QpSolution project_continuous(const std::vector<double>& v, const Region& region,
                              int max_iters = 10000);

// A point satisfying every row with strict slack; throws if none is found
// (Slater's condition violated by the config).
std::vector<double> find_interior_point(const Region& region);

}  // namespace lirl
