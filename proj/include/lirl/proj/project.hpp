#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lirl/core/types.hpp"
#include "lirl/proj/qp.hpp"

namespace lirl {

enum class DiscreteMode { Single, Batch };

struct Decoded {
    std::vector<std::vector<double>> u;  // jobs x robots logit matrix
    std::vector<double> v;               // preliminary knot vector
};

// All stages must share one knot dimension so the latent layout is fixed per
// scale; throws if the templates disagree.
int knot_dim(const Instance& inst);
int latent_dim(const Instance& inst);  // jobs*robots + knot_dim

// Pure slicing: first jobs*robots entries row-major into u, last kd into v.
Decoded decode(const LatentAction& z, const ProblemScale& scale, int kd);

// Single: feasible pair with the maximal logit. Batch: matching over feasible
// cells with maximum cardinality, then maximum total logit. Ties break toward
// the lowest (job, robot) lexicographically. Throws on empty feas.
std::vector<std::pair<int, int>> project_discrete(
    const std::vector<std::vector<double>>& u,
    const std::vector<std::pair<int, int>>& feas, DiscreteMode mode);

struct ProjectionStats {
    int qp_iterations = 0;     // summed over the step's QP solves
    double kkt_residual = 0.0;  // max over the step's QP solves
};

HybridAction project(const State& s, const LatentAction& z, const Instance& inst,
                     DiscreteMode mode = DiscreteMode::Single,
                     ProjectionStats* stats = nullptr);

// Max ratio ||a_c(z1) - a_c(z2)|| / ||z1 - z2|| over n_pairs standard-normal
// latent pairs that land on the same discrete outcome; 0 if none do.
double estimate_lipschitz(const State& s, const Instance& inst, int n_pairs,
                          std::uint64_t seed,
                          DiscreteMode mode = DiscreteMode::Single);

}  // namespace lirl
