#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "lirl/baselines/baselines.hpp"
#include "lirl/core/rng.hpp"
#include "lirl/env/env.hpp"
#include "test_util.hpp"

using namespace lirl;
using test::default_instance;
using test::default_stages;
using test::make_stage;
using test::raw_weights;

namespace {

double region_violation(const Region& r, const std::vector<double>& x) {
    double worst = 0.0;
    for (int i = 0; i < r.dim; ++i) {
        worst = std::max(worst, r.lower[i] - x[i]);
        worst = std::max(worst, x[i] - r.upper[i]);
    }
    for (size_t row = 0; row < r.A.size(); ++row) {
        double dot = 0.0;
        for (int i = 0; i < r.dim; ++i) dot += r.A[row][i] * x[i];
        worst = std::max(worst, dot - r.b[row]);
    }
    return worst;
}

}  // namespace

TEST_CASE("energy plan hits the analytic minimum when it is interior") {
    Instance inst = default_instance(1, 1);
    FixedVelocityPlan p = energy_opt_plan(inst.stages[0]);  // a=200 b=2: t* = 10
    CHECK(p.duration == doctest::Approx(10.0));
    for (double k : p.knots) CHECK(k == doctest::Approx(0.6));
    CHECK(Environment::energy_of(p.duration, inst.stages[0]) == doctest::Approx(50.0));
}

TEST_CASE("energy plan clamps the duration target into the box range") {
    // t* = sqrt(100/1) = 10 above t_max = 6: clamp to t_max, slowest knots
    StageTemplate slow = make_stage("s", {1.0, 1.0, 1.0}, 100.0, 1.0, 0.0, 0.5, 2.0, {});
    FixedVelocityPlan p = energy_opt_plan(slow);
    CHECK(p.duration == doctest::Approx(6.0));
    for (double k : p.knots) CHECK(k == doctest::Approx(0.5));

    // t* = 0.1 below t_min = 1.5: clamp to t_min, fastest knots
    StageTemplate fast = make_stage("f", {1.0, 1.0, 1.0}, 1.0, 100.0, 0.0, 0.5, 2.0, {});
    FixedVelocityPlan q = energy_opt_plan(fast);
    CHECK(q.duration == doctest::Approx(1.5));
    for (double k : q.knots) CHECK(k == doctest::Approx(2.0));
}

TEST_CASE("time plan projects the fast corner onto the coupling row") {
    Instance inst = default_instance(1, 1);
    // stage 0: corner (2,2,2) violates k1+k2 <= 3.5, projects to (1.75,1.75,2)
    FixedVelocityPlan p = time_opt_plan(inst.stages[0]);
    CHECK(p.knots[0] == doctest::Approx(1.75));
    CHECK(p.knots[1] == doctest::Approx(1.75));
    CHECK(p.knots[2] == doctest::Approx(2.0));
    CHECK(p.duration == doctest::Approx(2.0 / 1.75 + 2.0 / 1.75 + 1.0));

    StageTemplate boxonly = make_stage("b", {1.0, 2.0, 3.0}, 50.0, 1.0, 0.0, 0.5, 2.0, {});
    FixedVelocityPlan q = time_opt_plan(boxonly);
    for (double k : q.knots) CHECK(k == doctest::Approx(2.0));
    CHECK(q.duration == doctest::Approx(3.0));
}

TEST_CASE("per stage, time plans are faster and energy plans cheaper") {
    for (const StageTemplate& tmpl : default_stages()) {
        FixedVelocityPlan e = energy_opt_plan(tmpl);
        FixedVelocityPlan t = time_opt_plan(tmpl);
        CHECK(t.duration <= e.duration + 1e-9);
        CHECK(Environment::energy_of(e.duration, tmpl) <=
              Environment::energy_of(t.duration, tmpl) + 1e-9);
        // both plans are feasible points of the stage region
        Region r = continuous_region(tmpl);
        CHECK(region_violation(r, e.knots) <= 1e-9);
        CHECK(region_violation(r, t.knots) <= 1e-9);
    }
}

TEST_CASE("build_plan covers all five stages") {
    Instance inst = default_instance(2, 2);
    auto eplan = build_plan(inst, BaselineKind::EnergyOpt);
    auto tplan = build_plan(inst, BaselineKind::TimeOpt);
    REQUIRE(eplan.size() == 5);
    REQUIRE(tplan.size() == 5);
    for (int s = 0; s < 5; ++s) {
        CHECK(eplan[s].duration == doctest::Approx(energy_opt_plan(inst.stages[s]).duration));
        CHECK(tplan[s].duration == doctest::Approx(time_opt_plan(inst.stages[s]).duration));
    }
}

TEST_CASE("single job single robot runs the serial plan") {
    Instance inst = default_instance(1, 1);
    Environment env(inst, {}, raw_weights());
    auto plan = build_plan(inst, BaselineKind::EnergyOpt);
    BaselineRun run = dispatch_schedule(env, plan, DispatchMode::Greedy, 0);
    double want_makespan = 0.0, want_energy = 0.0;
    for (const auto& p : plan) {
        want_makespan += p.duration;
        want_energy += Environment::energy_of(p.duration, inst.stages[&p - plan.data()]);
    }
    CHECK(run.stats.makespan == doctest::Approx(want_makespan));
    CHECK(run.stats.energy == doctest::Approx(want_energy));
    CHECK(run.stats.violations == 0);
    REQUIRE(run.record.ops.size() == 5);
    for (const auto& op : run.record.ops)
        CHECK(op.end - op.start == doctest::Approx(plan[op.stage].duration));
}

TEST_CASE("greedy dispatch completes and is deterministic on a clean env") {
    Instance inst = default_instance(4, 2);
    Environment env(inst, {}, raw_weights());
    auto plan = build_plan(inst, BaselineKind::TimeOpt);
    BaselineRun a = dispatch_schedule(env, plan, DispatchMode::Greedy, 7);
    BaselineRun b = dispatch_schedule(env, plan, DispatchMode::Greedy, 8);
    CHECK(a.record.ops.size() == 20);
    CHECK(a.stats.violations == 0);
    CHECK(a.stats.makespan == b.stats.makespan);
    CHECK(a.stats.energy == b.stats.energy);
    CHECK(std::isfinite(a.stats.reward));
}

TEST_CASE("exact dispatch equals hand optima on degenerate shapes") {
    // one robot: every order gives the serial sum
    Instance serial = default_instance(2, 1);
    Environment env1(serial, {}, raw_weights());
    auto plan1 = build_plan(serial, BaselineKind::EnergyOpt);
    double stage_sum = 0.0;
    for (const auto& p : plan1) stage_sum += p.duration;
    BaselineRun ex1 = dispatch_schedule(env1, plan1, DispatchMode::Exact, 0);
    CHECK(ex1.stats.makespan == doctest::Approx(2.0 * stage_sum));

    // two jobs, two robots: both chains run in parallel without contention
    Instance par = default_instance(2, 2);
    Environment env2(par, {}, raw_weights());
    auto plan2 = build_plan(par, BaselineKind::TimeOpt);
    double chain = 0.0;
    for (const auto& p : plan2) chain += p.duration;
    BaselineRun ex2 = dispatch_schedule(env2, plan2, DispatchMode::Exact, 0);
    CHECK(ex2.stats.makespan == doctest::Approx(chain));
}

TEST_CASE("exact dispatch never loses to greedy over random physics") {
    Rng rng(2026);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<StageTemplate> stages;
        for (int s = 0; s < 5; ++s) {
            std::vector<double> base(3);
            for (double& b : base) b = rng.uniform(0.5, 3.0);
            std::vector<CouplingRow> rows;
            if (rng.uniform() < 0.7) {
                CouplingRow row;
                row.w = {1.0, 1.0, 0.0};
                if (rng.uniform() < 0.5) row.w = {0.0, 1.0, 1.0};
                row.rhs = rng.uniform(2.6, 3.8);
                rows.push_back(row);
            }
            stages.push_back(make_stage("rnd", base, rng.uniform(30.0, 300.0),
                                        rng.uniform(0.5, 5.0), rng.uniform(0.0, 15.0), 0.5,
                                        2.0, rows));
        }
        Instance inst;
        inst.scale = ProblemScale::parse("J3R2");
        inst.stages = stages;
        for (BaselineKind kind : {BaselineKind::EnergyOpt, BaselineKind::TimeOpt}) {
            Environment env(inst, {}, raw_weights());
            auto plan = build_plan(inst, kind);
            BaselineRun greedy = dispatch_schedule(env, plan, DispatchMode::Greedy, trial);
            BaselineRun exact = dispatch_schedule(env, plan, DispatchMode::Exact, trial);
            CHECK(exact.stats.makespan <= greedy.stats.makespan + 1e-9);
            CHECK(exact.record.ops.size() == 15);
            CHECK(greedy.record.ops.size() == 15);
        }
    }
}

TEST_CASE("exact dispatch rejects large scales and disturbed environments") {
    Instance big = default_instance(7, 3);
    Environment env_big(big, {}, raw_weights());
    auto plan_big = build_plan(big, BaselineKind::EnergyOpt);
    CHECK_THROWS(dispatch_schedule(env_big, plan_big, DispatchMode::Exact, 0));

    Instance wide = default_instance(4, 4);
    Environment env_wide(wide, {}, raw_weights());
    auto plan_wide = build_plan(wide, BaselineKind::EnergyOpt);
    CHECK_THROWS(dispatch_schedule(env_wide, plan_wide, DispatchMode::Exact, 0));

    Instance ok = default_instance(3, 2);
    DisturbanceConfig noisy;
    noisy.noise_sigma_factor = 0.2;
    Environment env_noisy(ok, noisy, raw_weights());
    auto plan_ok = build_plan(ok, BaselineKind::EnergyOpt);
    CHECK_THROWS(dispatch_schedule(env_noisy, plan_ok, DispatchMode::Exact, 0));
    // greedy still works under disturbances
    BaselineRun run = dispatch_schedule(env_noisy, plan_ok, DispatchMode::Greedy, 3);
    CHECK(run.record.ops.size() == 15);
}
