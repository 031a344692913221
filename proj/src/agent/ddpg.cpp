#include "lirl/agent/ddpg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "lirl/kernels/kernels.hpp"

namespace lirl {

namespace {
constexpr char kAgentMagic[8] = {'L', 'I', 'R', 'L', 'A', 'G', 'T', '1'};

double sample_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size() - 1));
}
}  // namespace

DdpgAgent::DdpgAgent(const Instance& inst, const AgentConfig& cfg, std::uint64_t seed)
    : inst_(inst),
      cfg_(cfg),
      feat_dim_(feature_dim(inst.scale)),
      latent_(latent_dim(inst)),
      actor_({feat_dim_, cfg.hidden, cfg.hidden, latent_}, mix_seed(seed, 1)),
      critic_({feat_dim_ + latent_, cfg.hidden, cfg.hidden, 1}, mix_seed(seed, 2)),
      actor_target_(actor_),
      critic_target_(critic_),
      actor_opt_(actor_.params().size(), cfg.actor_lr),
      critic_opt_(critic_.params().size(), cfg.critic_lr),
      buffer_(cfg.replay_capacity),
      explore_rng_(mix_seed(seed, 3)),
      sample_rng_(mix_seed(seed, 4)) {
    u_dim_ = inst.scale.jobs * inst.scale.robots;
    v_lo_ = static_cast<float>(inst.stages.front().knot_min);
    v_hi_ = static_cast<float>(inst.stages.front().knot_max);
    for (const StageTemplate& t : inst.stages) {
        v_lo_ = std::min(v_lo_, static_cast<float>(t.knot_min));
        v_hi_ = std::max(v_hi_, static_cast<float>(t.knot_max));
    }
}

void DdpgAgent::squash_rows(float* a, int rows) const {
    kernels::tanh_forward(a, rows * latent_);
    const float half = 0.5f * (v_hi_ - v_lo_);
    for (int r = 0; r < rows; ++r) {
        float* v = a + static_cast<size_t>(r) * latent_ + u_dim_;
        for (int i = 0; i < latent_ - u_dim_; ++i) v[i] = v_lo_ + (v[i] + 1.0f) * half;
    }
}

double DdpgAgent::exploration_sigma(int episode) const {
    const double frac =
        std::min(1.0, static_cast<double>(episode) /
                          std::max(1, cfg_.sigma_decay_episodes));
    return cfg_.sigma_start + frac * (cfg_.sigma_end - cfg_.sigma_start);
}

LatentAction DdpgAgent::act(const std::vector<float>& feat, double sigma) {
    std::vector<float> out = actor_.forward1(feat);
    squash_rows(out.data(), 1);
    LatentAction z;
    z.z.resize(out.size());
    for (size_t i = 0; i < out.size(); ++i) z.z[i] = out[i];
    if (sigma > 0.0)  // rng untouched in evaluation mode so streams stay aligned
        for (double& v : z.z) v += sigma * explore_rng_.normal();
    return z;
}

HybridAction DdpgAgent::masked_action(const LatentAction& z, const State& s,
                                      bool* near_miss) const {
    if (near_miss) *near_miss = false;
    const int kd = knot_dim(inst_);
    const Decoded d = decode(z, inst_.scale, kd);
    const auto feas = feasible_discrete(s);
    if (feas.empty()) throw std::runtime_error("masked_action: no feasible pair");
    // feasible_discrete is lex ordered; strict > keeps the first maximum
    std::pair<int, int> best = feas[0];
    double best_logit = d.u[best.first][best.second];
    for (const auto& [j, k] : feas)
        if (d.u[j][k] > best_logit) {
            best_logit = d.u[j][k];
            best = {j, k};
        }

    const StageTemplate& tmpl = inst_.stages[s.job_stage[best.first]];
    std::vector<double> x(kd);
    for (int i = 0; i < kd; ++i) x[i] = std::clamp(d.v[i], tmpl.knot_min, tmpl.knot_max);
    // clamping ignores coupling rows; pull toward the box center just enough
    const double center = 0.5 * (tmpl.knot_min + tmpl.knot_max);
    double t = 1.0;
    for (const auto& row : tmpl.coupling) {
        double wc = 0.0, wd = 0.0;
        for (int i = 0; i < kd; ++i) {
            wc += row.w[i] * center;
            wd += row.w[i] * (x[i] - center);
        }
        if (wc + wd > row.rhs && wd > 0.0) t = std::min(t, (row.rhs - wc) / wd);
    }
    if (t < 1.0) {
        for (int i = 0; i < kd; ++i) x[i] = center + t * (x[i] - center);
        if (near_miss) *near_miss = true;
    }
    HybridAction a;
    a.discrete = {best};
    a.knots = {std::move(x)};
    return a;
}

void DdpgAgent::update_batch() {
    const int B = cfg_.batch_size;
    const int F = feat_dim_, L = latent_;
    bs_.resize(static_cast<size_t>(B) * F);
    bz_.resize(static_cast<size_t>(B) * L);
    bs2_.resize(static_cast<size_t>(B) * F);
    br_.resize(B);
    bdone_.resize(B);
    for (int i = 0; i < B; ++i) {
        const Transition& t = buffer_[sample_rng_.uniform_int(0, buffer_.size() - 1)];
        std::memcpy(bs_.data() + static_cast<size_t>(i) * F, t.s.data(), sizeof(float) * F);
        std::memcpy(bz_.data() + static_cast<size_t>(i) * L, t.z.data(), sizeof(float) * L);
        std::memcpy(bs2_.data() + static_cast<size_t>(i) * F, t.s2.data(),
                    sizeof(float) * F);
        br_[i] = t.r;
        bdone_[i] = t.done;
    }

    // critic target y = r + gamma * (1 - done) * Q'(s', mu'(s'))
    a2_.resize(static_cast<size_t>(B) * L);
    actor_target_.forward(bs2_.data(), B, a2_.data());
    squash_rows(a2_.data(), B);
    cat_.resize(static_cast<size_t>(B) * (F + L));
    for (int i = 0; i < B; ++i) {
        std::memcpy(cat_.data() + static_cast<size_t>(i) * (F + L),
                    bs2_.data() + static_cast<size_t>(i) * F, sizeof(float) * F);
        std::memcpy(cat_.data() + static_cast<size_t>(i) * (F + L) + F,
                    a2_.data() + static_cast<size_t>(i) * L, sizeof(float) * L);
    }
    q_.resize(B);
    critic_target_.forward(cat_.data(), B, q_.data());
    std::vector<float>& y = a2_;  // reuse; a2 is no longer needed
    y.resize(B);
    for (int i = 0; i < B; ++i)
        y[i] = br_[i] + static_cast<float>(cfg_.gamma) * (1.0f - bdone_[i]) * q_[i];

    // critic MSE step on (s, z)
    for (int i = 0; i < B; ++i) {
        std::memcpy(cat_.data() + static_cast<size_t>(i) * (F + L),
                    bs_.data() + static_cast<size_t>(i) * F, sizeof(float) * F);
        std::memcpy(cat_.data() + static_cast<size_t>(i) * (F + L) + F,
                    bz_.data() + static_cast<size_t>(i) * L, sizeof(float) * L);
    }
    critic_.forward(cat_.data(), B, q_.data());
    dq_.resize(B);
    for (int i = 0; i < B; ++i) dq_[i] = 2.0f * (q_[i] - y[i]) / static_cast<float>(B);
    critic_.backward(dq_.data(), true);
    critic_.clip_grads(10.0);
    critic_.adam(critic_opt_);

    // actor ascends Q(s, mu(s)); gradient reaches it through the critic input
    std::vector<float>& a = a2_;
    a.resize(static_cast<size_t>(B) * L);
    actor_.forward(bs_.data(), B, a.data());
    kernels::tanh_forward(a.data(), B * L);  // keep tanh acts for the backward
    const float vhalf = 0.5f * (v_hi_ - v_lo_);
    for (int i = 0; i < B; ++i) {
        float* dst = cat_.data() + static_cast<size_t>(i) * (F + L) + F;
        const float* src = a.data() + static_cast<size_t>(i) * L;
        std::memcpy(dst, src, sizeof(float) * L);
        for (int l = u_dim_; l < L; ++l) dst[l] = v_lo_ + (src[l] + 1.0f) * vhalf;
    }
    critic_.forward(cat_.data(), B, q_.data());
    dq_.resize(B);
    for (int i = 0; i < B; ++i) dq_[i] = -1.0f / static_cast<float>(B);
    da_.resize(static_cast<size_t>(B) * L);
    critic_.backward(dq_.data(), false, da_.data(), F, F + L);
    for (int i = 0; i < B; ++i) {  // chain through the knot map, then the tanh
        float* d = da_.data() + static_cast<size_t>(i) * L;
        for (int l = u_dim_; l < L; ++l) d[l] *= vhalf;
    }
    kernels::ops().tanh_backward(da_.data(), a.data(), da_.data(), B * L);
    actor_.backward(da_.data(), true);
    actor_.clip_grads(10.0);
    actor_.adam(actor_opt_);

    actor_target_.soft_update_from(actor_, static_cast<float>(cfg_.tau));
    critic_target_.soft_update_from(critic_, static_cast<float>(cfg_.tau));
    gradient_steps_ += 1;
}

void DdpgAgent::save_checkpoint(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    os.write(kAgentMagic, sizeof(kAgentMagic));
    actor_.save(os);
    critic_.save(os);
    actor_target_.save(os);
    critic_target_.save(os);
    actor_opt_.save(os);
    critic_opt_.save(os);
    if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

DdpgAgent DdpgAgent::load_checkpoint(const std::string& path, const Instance& inst,
                                     const AgentConfig& cfg) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kAgentMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad agent checkpoint header: " + path);
    DdpgAgent agent(inst, cfg, 0);
    agent.actor_ = Mlp<float>::load(is);
    agent.critic_ = Mlp<float>::load(is);
    agent.actor_target_ = Mlp<float>::load(is);
    agent.critic_target_ = Mlp<float>::load(is);
    agent.actor_opt_ = AdamState<float>::load(is);
    agent.critic_opt_ = AdamState<float>::load(is);
    if (agent.actor_.input_dim() != agent.feat_dim_ ||
        agent.actor_.output_dim() != agent.latent_)
        throw std::runtime_error("checkpoint does not match the problem scale: " + path);
    return agent;
}

TrainResult train_run(DdpgAgent& agent, Environment& env, const TrainOptions& opt) {
    TrainResult result;
    const Instance& inst = agent.instance();
    for (int ep = 0; ep < opt.episodes; ++ep) {
        const auto t0 = std::chrono::steady_clock::now();
        env.reset(mix_seed(opt.seed, 0xE0000 + static_cast<std::uint64_t>(ep)));
        const double sigma = agent.exploration_sigma(ep);
        EpisodeStats stats;
        stats.episode = ep;
        long long qp_iters = 0;
        while (!env.done()) {
            const std::vector<float> feat = encode_state(env.state(), inst);
            const LatentAction z = agent.act(feat, sigma);
            HybridAction a;
            if (opt.variant == AgentVariant::Projection) {
                ProjectionStats ps;
                a = project(env.state(), z, inst, DiscreteMode::Single, &ps);
                qp_iters += ps.qp_iterations;
            } else {
                bool near_miss = false;
                a = agent.masked_action(z, env.state(), &near_miss);
                if (near_miss) stats.near_misses += 1;
            }
            const StepResult sr = env.step(a);
            Transition t;
            t.s = feat;
            t.z.assign(z.z.begin(), z.z.end());
            t.r = static_cast<float>(sr.reward);
            t.s2 = encode_state(env.state(), inst);
            t.done = sr.done ? 1.0f : 0.0f;
            agent.remember(std::move(t));
            stats.reward += sr.reward;
            if (agent.can_update())
                for (int u = 0; u < agent.config().updates_per_step; ++u)
                    agent.update_batch();
        }
        stats.makespan = env.state().makespan_acc;
        stats.energy = env.state().energy_acc;
        stats.violations = env.record().violations;
        stats.failures = env.record().failures;
        stats.steps = env.record().steps;
        stats.qp_iter_mean =
            env.record().steps > 0 ? static_cast<double>(qp_iters) / env.record().steps : 0.0;
        if (opt.collect_timing) {
            const auto t1 = std::chrono::steady_clock::now();
            stats.wallclock_ms =
                std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        result.total_violations += stats.violations;
        result.total_near_misses += stats.near_misses;
        result.episodes.push_back(stats);
        if (!opt.checkpoint_dir.empty() &&
            ((ep + 1) % agent.config().checkpoint_every == 0 || ep + 1 == opt.episodes)) {
            agent.save_checkpoint(opt.checkpoint_dir + "/" + opt.run_id + "_ep" +
                                  std::to_string(ep + 1) + ".ckpt");
        }
    }
    result.gradient_steps = agent.gradient_steps();
    return result;
}

EvalSummary evaluate(DdpgAgent& agent, Environment& env, int n_episodes,
                     std::uint64_t seed, AgentVariant variant) {
    if (n_episodes < 1) throw std::runtime_error("evaluate: need at least one episode");
    EvalSummary summary;
    std::vector<double> rewards, makespans, energies;
    const Instance& inst = agent.instance();
    for (int ep = 0; ep < n_episodes; ++ep) {
        env.reset(mix_seed(seed, 0xA0000 + static_cast<std::uint64_t>(ep)));
        EpisodeStats stats;
        stats.episode = ep;
        long long qp_iters = 0;
        while (!env.done()) {
            const std::vector<float> feat = encode_state(env.state(), inst);
            const LatentAction z = agent.act(feat, 0.0);
            HybridAction a;
            if (variant == AgentVariant::Projection) {
                ProjectionStats ps;
                a = project(env.state(), z, inst, DiscreteMode::Single, &ps);
                qp_iters += ps.qp_iterations;
            } else {
                bool near_miss = false;
                a = agent.masked_action(z, env.state(), &near_miss);
                if (near_miss) stats.near_misses += 1;
            }
            const StepResult sr = env.step(a);
            stats.reward += sr.reward;
        }
        stats.makespan = env.state().makespan_acc;
        stats.energy = env.state().energy_acc;
        stats.violations = env.record().violations;
        stats.failures = env.record().failures;
        stats.steps = env.record().steps;
        stats.qp_iter_mean =
            env.record().steps > 0 ? static_cast<double>(qp_iters) / env.record().steps : 0.0;
        summary.violations += stats.violations;
        rewards.push_back(stats.reward);
        makespans.push_back(stats.makespan);
        energies.push_back(stats.energy);
        summary.episodes.push_back(stats);
    }
    auto mean = [](const std::vector<double>& xs) {
        double m = 0.0;
        for (double x : xs) m += x;
        return m / static_cast<double>(xs.size());
    };
    summary.reward_mean = mean(rewards);
    summary.reward_std = sample_std(rewards, summary.reward_mean);
    summary.makespan_mean = mean(makespans);
    summary.makespan_std = sample_std(makespans, summary.makespan_mean);
    summary.energy_mean = mean(energies);
    summary.energy_std = sample_std(energies, summary.energy_mean);
    return summary;
}

}  // namespace lirl
