#include "lirl/proj/project.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lirl/core/rng.hpp"
#include "lirl/proj/hungarian.hpp"

namespace lirl {

int knot_dim(const Instance& inst) {
    if (inst.stages.empty()) throw std::runtime_error("instance has no stage templates");
    const int kd = inst.stages[0].knot_dim();
    for (const auto& st : inst.stages)
        if (st.knot_dim() != kd)
            throw std::runtime_error("stage templates disagree on knot dimension");
    return kd;
}

int latent_dim(const Instance& inst) {
    return inst.scale.jobs * inst.scale.robots + knot_dim(inst);
}

Decoded decode(const LatentAction& z, const ProblemScale& scale, int kd) {
    const int jk = scale.jobs * scale.robots;
    if (static_cast<int>(z.z.size()) != jk + kd)
        throw std::runtime_error("decode: latent length " + std::to_string(z.z.size()) +
                                 " does not match " + std::to_string(jk + kd));
    Decoded d;
    d.u.assign(scale.jobs, std::vector<double>(scale.robots));
    for (int j = 0; j < scale.jobs; ++j)
        for (int k = 0; k < scale.robots; ++k) d.u[j][k] = z.z[j * scale.robots + k];
    d.v.assign(z.z.begin() + jk, z.z.end());
    return d;
}

namespace {

// Max-cardinality, then max-total-logit matching over the feasible cells.
// Masked cells get a penalty big enough that any optimum uses as few of them
// as possible; the lexicographically smallest optimal matching is then found
// by committing feasible cells in (job, robot) order whenever forcing the
// cell keeps the reduced problem's optimum unchanged.
std::vector<std::pair<int, int>> batch_match(const std::vector<std::vector<double>>& u,
                                             std::vector<std::pair<int, int>> feas) {
    std::sort(feas.begin(), feas.end());
    std::vector<int> rows, cols;
    for (auto [j, k] : feas) {
        rows.push_back(j);
        cols.push_back(k);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());

    double range = 1.0;
    for (auto [j, k] : feas) range = std::max(range, std::abs(u[j][k]));
    const int side = static_cast<int>(std::min(rows.size(), cols.size()));
    const double penalty = (side + 1) * (2.0 * range + 1.0);

    auto cost_of = [&](int j, int k) {
        return std::binary_search(feas.begin(), feas.end(), std::make_pair(j, k))
                   ? -u[j][k]
                   : penalty;
    };
    auto solve = [&](const std::vector<int>& rs, const std::vector<int>& cs) {
        if (rs.empty() || cs.empty()) return 0.0;
        std::vector<std::vector<double>> m(rs.size(), std::vector<double>(cs.size()));
        for (size_t a = 0; a < rs.size(); ++a)
            for (size_t b = 0; b < cs.size(); ++b) m[a][b] = cost_of(rs[a], cs[b]);
        return hungarian(m).total;
    };

    double opt = solve(rows, cols);
    std::vector<std::pair<int, int>> chosen;
    for (auto [j, k] : feas) {
        if (!std::binary_search(rows.begin(), rows.end(), j) ||
            !std::binary_search(cols.begin(), cols.end(), k))
            continue;
        std::vector<int> sub_rows, sub_cols;
        for (int r : rows)
            if (r != j) sub_rows.push_back(r);
        for (int c : cols)
            if (c != k) sub_cols.push_back(c);
        const double sub = solve(sub_rows, sub_cols);
        if (cost_of(j, k) + sub <= opt + 1e-9 * (1.0 + std::abs(opt))) {
            chosen.emplace_back(j, k);
            rows = std::move(sub_rows);
            cols = std::move(sub_cols);
            opt = sub;
        }
    }
    return chosen;
}

}  // namespace

std::vector<std::pair<int, int>> project_discrete(
    const std::vector<std::vector<double>>& u,
    const std::vector<std::pair<int, int>>& feas, DiscreteMode mode) {
    if (feas.empty()) throw std::runtime_error("project_discrete: empty feasible set");
    if (mode == DiscreteMode::Batch) return batch_match(u, feas);

    std::vector<std::pair<int, int>> sorted = feas;
    std::sort(sorted.begin(), sorted.end());
    std::pair<int, int> best = sorted[0];
    double best_logit = u[best.first][best.second];
    for (const auto& [j, k] : sorted)
        if (u[j][k] > best_logit) {
            best_logit = u[j][k];
            best = {j, k};
        }
    return {best};
}

HybridAction project(const State& s, const LatentAction& z, const Instance& inst,
                     DiscreteMode mode, ProjectionStats* stats) {
    const int kd = knot_dim(inst);
    const Decoded d = decode(z, inst.scale, kd);
    HybridAction a;
    a.discrete = project_discrete(d.u, feasible_discrete(s), mode);
    for (const auto& [j, k] : a.discrete) {
        (void)k;
        const Region region = continuous_region(inst.stages[s.job_stage[j]]);
        QpSolution sol = project_continuous(d.v, region);
        if (stats) {
            stats->qp_iterations += sol.iterations;
            stats->kkt_residual = std::max(stats->kkt_residual, sol.kkt_residual);
        }
        a.knots.push_back(std::move(sol.x));
    }
    return a;
}

double estimate_lipschitz(const State& s, const Instance& inst, int n_pairs,
                          std::uint64_t seed, DiscreteMode mode) {
    if (n_pairs < 1) throw std::runtime_error("estimate_lipschitz: n_pairs must be >= 1");
    const int dim = latent_dim(inst);
    Rng rng(seed);
    double best = 0.0;
    for (int p = 0; p < n_pairs; ++p) {
        LatentAction z1, z2;
        z1.z.resize(dim);
        z2.z.resize(dim);
        for (double& x : z1.z) x = rng.normal();
        for (double& x : z2.z) x = rng.normal();
        const HybridAction a1 = project(s, z1, inst, mode);
        const HybridAction a2 = project(s, z2, inst, mode);
        if (a1.discrete != a2.discrete) continue;
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < a1.knots.size(); ++i)
            for (size_t c = 0; c < a1.knots[i].size(); ++c) {
                const double diff = a1.knots[i][c] - a2.knots[i][c];
                num += diff * diff;
            }
        for (int i = 0; i < dim; ++i) {
            const double diff = z1.z[i] - z2.z[i];
            den += diff * diff;
        }
        if (den > 0.0) best = std::max(best, std::sqrt(num / den));
    }
    return best;
}

}  // namespace lirl
