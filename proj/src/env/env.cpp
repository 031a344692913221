#include "lirl/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "lirl/proj/qp.hpp"

namespace lirl {

Environment::Environment(Instance inst, DisturbanceConfig disturb, RewardWeights weights,
                         int step_limit)
    : inst_(std::move(inst)),
      disturb_(std::move(disturb)),
      weights_(weights),
      step_limit_(step_limit) {
    if (static_cast<int>(inst_.stages.size()) != ProblemScale::stage_count)
        throw std::runtime_error("instance must define exactly 5 stage templates");
    if (weights_.makespan.stdev <= 0.0 || weights_.energy.stdev <= 0.0)
        throw std::runtime_error("normalization stds must be positive");
    if (step_limit_ < 1) throw std::runtime_error("step limit must be positive");
}

double Environment::duration_of(const std::vector<double>& knots, const StageTemplate& tmpl) {
    if (knots.size() != tmpl.base_seg.size())
        throw std::runtime_error("duration_of: knot count does not match segment count");
    double t = 0.0;
    for (size_t i = 0; i < knots.size(); ++i) {
        if (knots[i] <= 0.0) throw std::runtime_error("duration_of: non-positive knot");
        t += tmpl.base_seg[i] / knots[i];
    }
    return t;
}

double Environment::energy_of(double t, const StageTemplate& tmpl) {
    if (t <= 0.0) throw std::runtime_error("energy_of: non-positive duration");
    return tmpl.energy_a / t + tmpl.energy_b * t + tmpl.energy_c;
}

const State& Environment::reset(std::uint64_t seed) {
    state_ = fresh_state(inst_.scale);
    record_ = EpisodeRecord{};
    rng_ = Rng(seed);
    done_ = false;
    return state_;
}

bool Environment::all_complete() const {
    for (int st : state_.job_stage)
        if (st < ProblemScale::stage_count) return false;
    return true;
}

void Environment::advance() {
    for (;;) {
        if (all_complete() || is_decision_point(state_)) return;
        double t_next = std::numeric_limits<double>::infinity();
        for (const auto& r : state_.robots)
            if (r.mode != RobotMode::Idle) t_next = std::min(t_next, r.until);
        if (!std::isfinite(t_next)) return;  // unreachable: some job must be in flight
        state_.clock = t_next;
        for (auto& r : state_.robots)
            if (r.mode != RobotMode::Idle && r.until <= t_next) r = {RobotMode::Idle, 0.0};
        for (int j = 0; j < inst_.scale.jobs; ++j)
            if (state_.in_flight[j] && state_.in_flight[j]->finish <= t_next) {
                state_.job_stage[j] += 1;
                state_.in_flight[j].reset();
            }
    }
}

StepResult Environment::step(const HybridAction& a) {
    if (done_) throw std::runtime_error("step called on a finished episode");
    StepResult res;
    if (!evaluate_phi(state_, a, inst_)) {
        record_.violations += 1;
        record_.steps += 1;
        done_ = true;
        res.done = true;
        res.violation = true;
        return res;
    }

    const double clock_before = state_.clock;
    double energy_delta = 0.0;
    int dispatched = 0;
    for (size_t i = 0; i < a.discrete.size(); ++i) {
        const auto [j, k] = a.discrete[i];
        const StageTemplate& tmpl = inst_.stages[state_.job_stage[j]];
        const double t_cmd = duration_of(a.knots[i], tmpl);

        bool failed = false;
        if (disturb_.failure_prob > 0.0 && state_.failure_count < disturb_.max_failures)
            failed = rng_.uniform() < disturb_.failure_prob;
        if (failed) {
            const double factor = rng_.uniform(disturb_.repair_min, disturb_.repair_max);
            const double until = state_.clock + factor * t_cmd;
            state_.robots[k] = {RobotMode::Broken, until};
            state_.failure_count += 1;
            record_.failures += 1;
            record_.repairs.push_back({k, state_.clock, until, t_cmd});
            continue;  // operation re-queues from scratch after the repair
        }

        double t_real = t_cmd;
        if (disturb_.noise_sigma_factor > 0.0) {
            const double mu = tmpl.t_min() + 0.5 * (tmpl.t_max() - tmpl.t_min());
            t_real += disturb_.noise_sigma_factor * mu * rng_.normal();
            t_real = std::max(t_real, 0.1 * tmpl.t_min());
        }
        const double finish = state_.clock + t_real;
        state_.robots[k] = {RobotMode::Busy, finish};
        state_.in_flight[j] = InFlightOp{k, finish};
        // energy is charged on the commanded duration; noise shifts time only
        const double e = energy_of(t_cmd, tmpl);
        energy_delta += e;
        state_.energy_acc += e;
        record_.ops.push_back({j, state_.job_stage[j], k, state_.clock, finish, e});
        dispatched += 1;
    }

    advance();
    record_.steps += 1;
    state_.makespan_acc = state_.clock;

    const double cost_delta = state_.clock - clock_before;
    res.reward = -(weights_.alpha * cost_delta / weights_.makespan.stdev +
                   (1.0 - weights_.alpha) * energy_delta / weights_.energy.stdev);
    // The normalization offset is paid per successful dispatch instead of as a
    // terminal lump: every operation dispatches successfully exactly once on a
    // completed episode (failures re-queue), so the episodic return still
    // telescopes to the normalized objective while Q keeps a flat scale.
    const double total_ops = static_cast<double>(inst_.scale.jobs) * ProblemScale::stage_count;
    res.reward += dispatched *
                  (weights_.alpha * weights_.makespan.mean / weights_.makespan.stdev +
                   (1.0 - weights_.alpha) * weights_.energy.mean / weights_.energy.stdev) /
                  total_ops;
    if (all_complete() || record_.steps >= step_limit_) done_ = true;
    res.done = done_;
    return res;
}

RewardWeights compute_norm_stats(const Instance& inst, int n_rollouts, std::uint64_t seed) {
    if (n_rollouts < 2) throw std::runtime_error("compute_norm_stats: need n_rollouts >= 2");
    std::vector<double> mk, en;
    mk.reserve(n_rollouts);
    en.reserve(n_rollouts);
    Environment env(inst, DisturbanceConfig{}, RewardWeights{});
    for (int r = 0; r < n_rollouts; ++r) {
        env.reset(mix_seed(seed, r));
        Rng policy(mix_seed(seed, 0x10000 + r));
        while (!env.done()) {
            const auto feas = feasible_discrete(env.state());
            const auto pick = feas[policy.uniform_int(0, static_cast<int>(feas.size()) - 1)];
            const StageTemplate& tmpl = inst.stages[env.state().job_stage[pick.first]];
            std::vector<double> knots(tmpl.knot_dim());
            for (double& x : knots) x = policy.uniform(tmpl.knot_min, tmpl.knot_max);
            HybridAction a;
            a.discrete = {pick};
            a.knots = {project_continuous(knots, continuous_region(tmpl)).x};
            env.step(a);
        }
        mk.push_back(env.state().makespan_acc);
        en.push_back(env.state().energy_acc);
    }
    auto stats = [&](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
        if (var <= 0.0) throw std::runtime_error("compute_norm_stats: degenerate rollouts");
        return NormStats{mean, std::sqrt(var)};
    };
    RewardWeights w;
    w.makespan = stats(mk);
    w.energy = stats(en);
    return w;
}

}  // namespace lirl
