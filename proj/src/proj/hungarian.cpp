#include "lirl/proj/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace lirl {

namespace {
constexpr double kPad = 1e9;  // sentinel cost for padded cells
}

// O(n^3) potentials formulation over the padded square matrix. Row/column
// potentials u, v keep reduced costs non-negative; each phase grows an
// alternating tree from one unassigned row via shortest reduced-cost paths.
AssignmentResult hungarian(const std::vector<std::vector<double>>& cost) {
    const int rows = static_cast<int>(cost.size());
    if (rows == 0 || cost[0].empty()) throw std::runtime_error("hungarian: empty cost matrix");
    const int cols = static_cast<int>(cost[0].size());
    for (const auto& r : cost)
        if (static_cast<int>(r.size()) != cols)
            throw std::runtime_error("hungarian: ragged cost matrix");

    const int n = std::max(rows, cols);
    auto cell = [&](int r, int c) -> double {
        return (r < rows && c < cols) ? cost[r][c] : kPad;
    };

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; p[j] = row assigned to column j, column 0 is virtual
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    AssignmentResult res;
    for (int j = 1; j <= n; ++j) {
        const int r = p[j] - 1, c = j - 1;
        if (r < rows && c < cols) {
            res.pairs.emplace_back(r, c);
            res.total += cost[r][c];
        }
    }
    std::sort(res.pairs.begin(), res.pairs.end());
    return res;
}

}  // namespace lirl
