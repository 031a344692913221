#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lirl/agent/features.hpp"
#include "lirl/core/rng.hpp"
#include "lirl/env/env.hpp"
#include "lirl/nn/mlp.hpp"
#include "lirl/proj/project.hpp"

namespace lirl {

struct AgentConfig {
    double gamma = 0.99;
    double tau = 0.005;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    int batch_size = 64;
    int updates_per_step = 10;
    int replay_capacity = 100000;
    int replay_min = 500;  // gradient steps start once the buffer holds more
    int hidden = 128;
    double sigma_start = 0.3;
    double sigma_end = 0.05;
    int sigma_decay_episodes = 200;
    int checkpoint_every = 10;  // episodes
};

struct Transition {
    std::vector<float> s;   // features before the step
    std::vector<float> z;   // pre-projection latent, the learned quantity
    float r = 0.0f;
    std::vector<float> s2;  // features after the step
    float done = 0.0f;
};

class ReplayBuffer {
  public:
    explicit ReplayBuffer(int capacity) : capacity_(capacity) { data_.reserve(capacity); }
    void push(Transition t) {
        if (static_cast<int>(data_.size()) < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }
    int size() const { return static_cast<int>(data_.size()); }
    const Transition& operator[](int i) const { return data_[i]; }

  private:
    std::vector<Transition> data_;
    int capacity_;
    int next_ = 0;
};

enum class AgentVariant { Projection, Masked };

// Latent-action DDPG. The actor emits z; the executed action is either the
// projected z (Projection) or masked argmax plus box clamping (Masked). The
// critic conditions on z itself so gradients never cross the projection.
class DdpgAgent {
  public:
    DdpgAgent(const Instance& inst, const AgentConfig& cfg, std::uint64_t seed);

    LatentAction act(const std::vector<float>& feat, double sigma);

    // Ablation path: restricted argmax over feasible pairs, knots clamped to
    // the box; a violated coupling row is repaired by scaling toward the box
    // center and flags *near_miss.
    HybridAction masked_action(const LatentAction& z, const State& s, bool* near_miss) const;

    void remember(Transition t) { buffer_.push(std::move(t)); }
    bool can_update() const { return buffer_.size() > cfg_.replay_min; }
    void update_batch();  // one critic step, one actor step, soft target updates

    double exploration_sigma(int episode) const;

    const AgentConfig& config() const { return cfg_; }
    const Instance& instance() const { return inst_; }
    long long gradient_steps() const { return gradient_steps_; }
    int buffer_size() const { return buffer_.size(); }

    Mlp<float>& actor() { return actor_; }
    Mlp<float>& critic() { return critic_; }
    Mlp<float>& actor_target() { return actor_target_; }
    Mlp<float>& critic_target() { return critic_target_; }

    void save_checkpoint(const std::string& path) const;
    static DdpgAgent load_checkpoint(const std::string& path, const Instance& inst,
                                     const AgentConfig& cfg);

  private:
    // tanh-bound the raw actor output, then map the knot slice onto
    // [v_lo_, v_hi_] so every commanded speed is reachable
    void squash_rows(float* a, int rows) const;

    Instance inst_;
    AgentConfig cfg_;
    int feat_dim_ = 0, latent_ = 0, u_dim_ = 0;
    float v_lo_ = 0.0f, v_hi_ = 1.0f;
    Mlp<float> actor_, critic_, actor_target_, critic_target_;
    AdamState<float> actor_opt_, critic_opt_;
    ReplayBuffer buffer_;
    Rng explore_rng_{0}, sample_rng_{0};
    long long gradient_steps_ = 0;

    // batch workspaces
    std::vector<float> bs_, bz_, bs2_, br_, bdone_, cat_, q_, a2_, dq_, da_;
};

struct EpisodeStats {
    int episode = 0;
    double reward = 0.0;
    double makespan = 0.0;
    double energy = 0.0;
    int violations = 0;
    double qp_iter_mean = 0.0;  // per-step mean of QP iterations
    double wallclock_ms = 0.0;
    int near_misses = 0;
    int failures = 0;
    int steps = 0;
};

struct TrainOptions {
    AgentVariant variant = AgentVariant::Projection;
    int episodes = 300;
    std::uint64_t seed = 0;
    std::string checkpoint_dir;  // empty disables checkpointing
    std::string run_id;
    bool collect_timing = false;
};

struct TrainResult {
    std::vector<EpisodeStats> episodes;
    long long gradient_steps = 0;
    int total_violations = 0;
    int total_near_misses = 0;
};

TrainResult train_run(DdpgAgent& agent, Environment& env, const TrainOptions& opt);

struct EvalSummary {
    double reward_mean = 0.0, reward_std = 0.0;
    double makespan_mean = 0.0, makespan_std = 0.0;
    double energy_mean = 0.0, energy_std = 0.0;
    int violations = 0;
    std::vector<EpisodeStats> episodes;
};

// Noise-free rollouts of the current actor.
EvalSummary evaluate(DdpgAgent& agent, Environment& env, int n_episodes,
                     std::uint64_t seed, AgentVariant variant);

}  // namespace lirl
