#include "lirl/baselines/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lirl/proj/project.hpp"
#include "lirl/proj/qp.hpp"

namespace lirl {

FixedVelocityPlan energy_opt_plan(const StageTemplate& tmpl) {
    const double t_star =
        std::clamp(std::sqrt(tmpl.energy_a / tmpl.energy_b), tmpl.t_min(), tmpl.t_max());
    const double base_sum =
        std::accumulate(tmpl.base_seg.begin(), tmpl.base_seg.end(), 0.0);
    std::vector<double> knots(tmpl.knot_dim(), base_sum / t_star);
    FixedVelocityPlan p;
    p.knots = project_continuous(knots, continuous_region(tmpl)).x;
    p.duration = Environment::duration_of(p.knots, tmpl);
    return p;
}

FixedVelocityPlan time_opt_plan(const StageTemplate& tmpl) {
    std::vector<double> knots(tmpl.knot_dim(), tmpl.knot_max);
    FixedVelocityPlan p;
    p.knots = project_continuous(knots, continuous_region(tmpl)).x;
    p.duration = Environment::duration_of(p.knots, tmpl);
    return p;
}

std::vector<FixedVelocityPlan> build_plan(const Instance& inst, BaselineKind kind) {
    std::vector<FixedVelocityPlan> plan;
    plan.reserve(inst.stages.size());
    for (const auto& tmpl : inst.stages)
        plan.push_back(kind == BaselineKind::EnergyOpt ? energy_opt_plan(tmpl)
                                                       : time_opt_plan(tmpl));
    return plan;
}

namespace {

// Branch and bound over active schedules: dispatch only at decision epochs,
// never leave a robot idle on purpose. Workcells are homogeneous and jobs
// share the stage templates, so the robot choice collapses by symmetry and
// ready candidates dedupe by stage. With a fixed velocity plan the total
// energy is schedule-independent, so the weighted objective reduces to
// makespan.
struct ExactSolver {
    int jobs, robots;
    std::vector<double> dur;     // nominal duration per stage
    std::vector<double> suffix;  // remaining work from a given stage on
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_seq, seq;
    long long nodes = 0;
    static constexpr long long kNodeBudget = 20'000'000;

    struct Node {
        std::vector<double> free;   // per robot
        std::vector<double> ready;  // per job
        std::vector<int> stage;
    };

    void dfs(const Node& n) {
        if (++nodes > kNodeBudget)
            throw std::runtime_error("exact dispatch: search budget exceeded");

        bool complete = true;
        double makespan = 0.0;
        for (int j = 0; j < jobs; ++j) {
            if (n.stage[j] < ProblemScale::stage_count) complete = false;
            makespan = std::max(makespan, n.ready[j]);
        }
        if (complete) {
            if (makespan < best) {
                best = makespan;
                best_seq = seq;
            }
            return;
        }

        const double min_free = *std::min_element(n.free.begin(), n.free.end());
        double epoch = std::numeric_limits<double>::infinity();
        double lb = 0.0, total_rem = 0.0, free_sum = 0.0;
        for (int j = 0; j < jobs; ++j) {
            if (n.stage[j] >= ProblemScale::stage_count) {
                lb = std::max(lb, n.ready[j]);
                continue;
            }
            const double start = std::max(n.ready[j], min_free);
            epoch = std::min(epoch, start);
            lb = std::max(lb, start + suffix[n.stage[j]]);
            total_rem += suffix[n.stage[j]];
        }
        for (double f : n.free) free_sum += f;
        lb = std::max(lb, (total_rem + free_sum) / robots);
        if (lb >= best - 1e-12) return;

        int robot = 0;
        for (int k = 1; k < robots; ++k)
            if (n.free[k] < n.free[robot]) robot = k;

        bool seen[ProblemScale::stage_count] = {};
        for (int j = 0; j < jobs; ++j) {
            const int st = n.stage[j];
            if (st >= ProblemScale::stage_count || n.ready[j] > epoch || seen[st]) continue;
            seen[st] = true;
            Node child = n;
            child.free[robot] = epoch + dur[st];
            child.ready[j] = epoch + dur[st];
            child.stage[j] += 1;
            seq.push_back(j);
            dfs(child);
            seq.pop_back();
        }
    }
};

void accumulate_step(EpisodeStats& stats, const StepResult& sr) { stats.reward += sr.reward; }

void finish_stats(EpisodeStats& stats, const Environment& env) {
    stats.makespan = env.state().makespan_acc;
    stats.energy = env.state().energy_acc;
    stats.violations = env.record().violations;
    stats.failures = env.record().failures;
    stats.steps = env.record().steps;
}

BaselineRun run_greedy(Environment& env, const std::vector<FixedVelocityPlan>& plan,
                       std::uint64_t seed) {
    env.reset(seed);
    const auto& scale = env.instance().scale;
    BaselineRun out;
    while (!env.done()) {
        const auto feas = feasible_discrete(env.state());
        std::vector<std::vector<double>> u(scale.jobs, std::vector<double>(scale.robots, 0.0));
        for (const auto& [j, k] : feas)
            u[j][k] = -plan[env.state().job_stage[j]].duration;  // completion-time increment
        HybridAction a;
        a.discrete = project_discrete(u, feas, DiscreteMode::Batch);
        for (const auto& [j, k] : a.discrete) {
            (void)k;
            a.knots.push_back(plan[env.state().job_stage[j]].knots);
        }
        accumulate_step(out.stats, env.step(a));
    }
    finish_stats(out.stats, env);
    out.record = env.record();
    return out;
}

BaselineRun run_exact(Environment& env, const std::vector<FixedVelocityPlan>& plan,
                      std::uint64_t seed) {
    const auto& scale = env.instance().scale;
    if (scale.jobs > 6 || scale.robots > 3)
        throw std::runtime_error("exact dispatch supports at most 6 jobs and 3 workcells");
    const auto& dis = env.disturbance();
    if (dis.noise_sigma_factor > 0.0 || dis.failure_prob > 0.0)
        throw std::runtime_error("exact dispatch requires a disturbance-free environment");

    ExactSolver solver;
    solver.jobs = scale.jobs;
    solver.robots = scale.robots;
    for (const auto& p : plan) solver.dur.push_back(p.duration);
    solver.suffix.assign(solver.dur.size() + 1, 0.0);
    for (int st = static_cast<int>(solver.dur.size()) - 1; st >= 0; --st)
        solver.suffix[st] = solver.suffix[st + 1] + solver.dur[st];
    ExactSolver::Node root;
    root.free.assign(scale.robots, 0.0);
    root.ready.assign(scale.jobs, 0.0);
    root.stage.assign(scale.jobs, 0);
    solver.dfs(root);

    env.reset(seed);
    BaselineRun out;
    std::size_t pos = 0;
    while (!env.done()) {
        if (pos >= solver.best_seq.size())
            throw std::runtime_error("exact dispatch: schedule desynchronized");
        const int j = solver.best_seq[pos++];
        int robot = -1;
        for (int k = 0; k < scale.robots; ++k)
            if (env.state().robots[k].mode == RobotMode::Idle) {
                robot = k;
                break;
            }
        HybridAction a;
        a.discrete = {{j, robot}};
        a.knots = {plan[env.state().job_stage[j]].knots};
        accumulate_step(out.stats, env.step(a));
    }
    finish_stats(out.stats, env);
    out.record = env.record();
    return out;
}

}  // namespace

BaselineRun dispatch_schedule(Environment& env, const std::vector<FixedVelocityPlan>& plan,
                              DispatchMode mode, std::uint64_t seed) {
    if (plan.size() != env.instance().stages.size())
        throw std::runtime_error("dispatch_schedule: plan does not cover all stages");
    return mode == DispatchMode::Greedy ? run_greedy(env, plan, seed)
                                        : run_exact(env, plan, seed);
}

}  // namespace lirl
