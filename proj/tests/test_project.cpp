#include <cmath>

#include "doctest.h"
#include "lirl/core/rng.hpp"
#include "lirl/env/env.hpp"
#include "lirl/proj/project.hpp"
#include "test_util.hpp"

using namespace lirl;
using test::default_instance;
using test::make_stage;
using test::raw_weights;

TEST_CASE("latent layout is logits then knots") {
    Instance inst = default_instance(2, 2);
    CHECK(knot_dim(inst) == 3);
    CHECK(latent_dim(inst) == 7);
    LatentAction z{{1, 2, 3, 4, 0.5, 0.6, 0.7}};
    Decoded d = decode(z, inst.scale, knot_dim(inst));
    REQUIRE(d.u.size() == 2);
    CHECK(d.u[0] == std::vector<double>{1, 2});
    CHECK(d.u[1] == std::vector<double>{3, 4});
    CHECK(d.v == std::vector<double>{0.5, 0.6, 0.7});
}

TEST_CASE("decode rejects wrong lengths and passes zeros through") {
    Instance inst = default_instance(2, 2);
    CHECK_THROWS(decode(LatentAction{{1, 2, 3}}, inst.scale, 3));
    Decoded d = decode(LatentAction{std::vector<double>(7, 0.0)}, inst.scale, 3);
    CHECK(d.u[0] == std::vector<double>{0, 0});
    CHECK(d.u[1] == std::vector<double>{0, 0});
    CHECK(d.v == std::vector<double>{0, 0, 0});
}

TEST_CASE("mixed knot dimensions across stages are rejected") {
    Instance inst = default_instance(1, 1);
    inst.stages[3].base_seg = {1.0, 2.0};
    CHECK_THROWS(knot_dim(inst));
}

TEST_CASE("single mode picks the max-logit feasible pair") {
    std::vector<std::vector<double>> u{{5, 1}, {2, 3}};
    std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto got = project_discrete(u, all, DiscreteMode::Single);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 0}});

    std::vector<std::pair<int, int>> masked{{0, 1}, {1, 0}, {1, 1}};
    got = project_discrete(u, masked, DiscreteMode::Single);
    CHECK(got == std::vector<std::pair<int, int>>{{1, 1}});
}

TEST_CASE("single mode breaks ties toward the lowest pair") {
    std::vector<std::vector<double>> u{{2, 2}, {2, 2}};
    std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto got = project_discrete(u, all, DiscreteMode::Single);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("batch mode maximizes total logit over a full matching") {
    std::vector<std::vector<double>> u{{5, 1}, {2, 3}};
    std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto got = project_discrete(u, all, DiscreteMode::Batch);
    REQUIRE(got.size() == 2);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
    double total = 0.0;
    for (auto [j, k] : got) total += u[j][k];
    CHECK(total == doctest::Approx(8.0));
}

TEST_CASE("batch mode prefers cardinality over raw score") {
    // the lone high logit would win any 1-pair matching, but 2 pairs exist
    std::vector<std::vector<double>> u{{100, -50}, {-50, -60}};
    std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto got = project_discrete(u, all, DiscreteMode::Batch);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("batch mode respects the feasibility mask") {
    std::vector<std::vector<double>> u{{5, 1}, {2, 3}};
    std::vector<std::pair<int, int>> feas{{0, 1}, {1, 0}};
    auto got = project_discrete(u, feas, DiscreteMode::Batch);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}});
}

TEST_CASE("batch ties break lexicographically") {
    std::vector<std::vector<double>> u{{1, 1}, {1, 1}};
    std::vector<std::pair<int, int>> all{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto got = project_discrete(u, all, DiscreteMode::Batch);
    CHECK(got == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("empty feasible set is a caller bug") {
    std::vector<std::vector<double>> u{{1.0}};
    CHECK_THROWS(project_discrete(u, {}, DiscreteMode::Single));
    CHECK_THROWS(project_discrete(u, {}, DiscreteMode::Batch));
}

TEST_CASE("batch matching matches exhaustive search on random instances") {
    Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        int jobs = 1 + rng.uniform_int(0, 3);
        int robots = 1 + rng.uniform_int(0, 3);
        std::vector<std::vector<double>> u(jobs, std::vector<double>(robots));
        for (auto& row : u)
            for (double& x : row) x = rng.uniform_int(-5, 5);
        std::vector<std::pair<int, int>> feas;
        for (int j = 0; j < jobs; ++j)
            for (int k = 0; k < robots; ++k)
                if (rng.uniform() < 0.7) feas.emplace_back(j, k);
        if (feas.empty()) continue;

        auto got = project_discrete(u, feas, DiscreteMode::Batch);

        // brute force: enumerate all subsets of feas that form a matching
        size_t best_card = 0;
        double best_total = -1e300;
        int m = static_cast<int>(feas.size());
        for (int mask = 0; mask < (1 << m); ++mask) {
            std::vector<bool> jb(jobs, false), kb(robots, false);
            bool ok = true;
            size_t card = 0;
            double tot = 0.0;
            for (int i = 0; i < m && ok; ++i) {
                if (!(mask & (1 << i))) continue;
                auto [j, k] = feas[i];
                if (jb[j] || kb[k]) ok = false;
                jb[j] = kb[k] = true;
                tot += u[j][k];
                ++card;
            }
            if (!ok) continue;
            if (card > best_card || (card == best_card && tot > best_total)) {
                best_card = card;
                best_total = tot;
            }
        }
        CAPTURE(trial);
        REQUIRE(got.size() == best_card);
        double total = 0.0;
        for (auto [j, k] : got) total += u[j][k];
        CHECK(total == doctest::Approx(best_total));
    }
}

TEST_CASE("projected actions always satisfy phi") {
    // Lemma 1 at unit-test scale: random episode prefixes, random latents.
    Instance inst = default_instance(4, 2);
    Environment env(inst, {}, raw_weights(), 200);
    Rng rng(41);
    int L = latent_dim(inst);
    int checked = 0;
    for (int ep = 0; ep < 20; ++ep) {
        env.reset(1000 + ep);
        while (!env.done()) {
            for (int probe = 0; probe < 5; ++probe) {
                LatentAction z;
                for (int i = 0; i < L; ++i) z.z.push_back(rng.normal() * 3.0);
                DiscreteMode mode = probe % 2 ? DiscreteMode::Batch : DiscreteMode::Single;
                HybridAction a = project(env.state(), z, inst, mode);
                CHECK(evaluate_phi(env.state(), a, inst));
                ++checked;
            }
            LatentAction z;
            for (int i = 0; i < L; ++i) z.z.push_back(rng.normal());
            env.step(project(env.state(), z, inst));
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("feasible latents pass through unchanged") {
    Instance inst = default_instance(2, 2);
    State s = fresh_state(inst.scale);
    // logits with a unique max on (0,0); knots strictly inside stage 0
    LatentAction z{{9, 1, 2, 3, 1.0, 1.2, 1.4}};
    HybridAction a = project(s, z, inst, DiscreteMode::Single);
    REQUIRE(a.discrete.size() == 1);
    CHECK(a.discrete[0] == std::pair<int, int>{0, 0});
    CHECK(a.knots[0] == std::vector<double>{1.0, 1.2, 1.4});  // fast path, bitwise
}

TEST_CASE("projection statistics accumulate") {
    Instance inst = default_instance(3, 3);
    State s = fresh_state(inst.scale);
    LatentAction z;
    for (int i = 0; i < latent_dim(inst); ++i) z.z.push_back(5.0);  // knots far outside
    ProjectionStats ps;
    HybridAction a = project(s, z, inst, DiscreteMode::Batch, &ps);
    CHECK(a.discrete.size() == 3);
    CHECK(ps.qp_iterations > 0);
    CHECK(ps.kkt_residual <= 1e-6);
}

TEST_CASE("projection contracts latent perturbations") {
    Instance inst = default_instance(3, 2);
    State s = fresh_state(inst.scale);
    double lhat = estimate_lipschitz(s, inst, 500, 77);
    CHECK(lhat > 0.0);
    CHECK(lhat <= 1.0 + 1e-9);  // Euclidean projection is non-expansive

    // spot check the recorded bound on fresh draws
    Rng rng(78);
    int L = latent_dim(inst);
    for (int i = 0; i < 50; ++i) {
        LatentAction z1, z2;
        for (int d = 0; d < L; ++d) z1.z.push_back(rng.normal());
        z2 = z1;
        double delta = 0.0;
        for (int d = 0; d < L; ++d) {
            double step = rng.normal() * 1e-3;
            z2.z[d] += step;
            delta += step * step;
        }
        delta = std::sqrt(delta);
        HybridAction a1 = project(s, z1, inst);
        HybridAction a2 = project(s, z2, inst);
        if (a1.discrete != a2.discrete) continue;
        double dc = 0.0;
        for (size_t p = 0; p < a1.knots.size(); ++p)
            for (size_t d = 0; d < a1.knots[p].size(); ++d)
                dc += (a1.knots[p][d] - a2.knots[p][d]) * (a1.knots[p][d] - a2.knots[p][d]);
        CHECK(std::sqrt(dc) <= 1.0 * delta + 1e-12);
    }
}

TEST_CASE("lipschitz estimation needs at least one pair") {
    Instance inst = default_instance(1, 1);
    State s = fresh_state(inst.scale);
    CHECK_THROWS(estimate_lipschitz(s, inst, 0, 1));
}
