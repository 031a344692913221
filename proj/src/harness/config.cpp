#include "lirl/harness/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lirl {

namespace {

using nlohmann::json;

std::pair<int, int> line_col(const std::string& text, size_t byte) {
    int line = 1, col = 1;
    for (size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Typed readers that name the offending JSON path in every failure.
struct Loader {
    std::string file;

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw ConfigError(file + ": " + path + ": " + msg);
    }

    const json& at(const json& j, const std::string& path, const char* key) const {
        if (!j.is_object()) fail(path, "expected an object");
        auto it = j.find(key);
        if (it == j.end()) fail(path + "." + key, "missing required key");
        return *it;
    }

    bool has(const json& j, const char* key) const {
        return j.is_object() && j.contains(key);
    }

    void check_keys(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) const {
        if (!j.is_object()) fail(path, "expected an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = false;
            for (const char* k : allowed)
                if (it.key() == k) {
                    known = true;
                    break;
                }
            if (!known) fail(path + "." + it.key(), "unknown key");
        }
    }

    double num(const json& j, const std::string& path) const {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    int integer(const json& j, const std::string& path) const {
        if (!j.is_number_integer()) fail(path, "expected an integer");
        return j.get<int>();
    }

    std::uint64_t uinteger(const json& j, const std::string& path) const {
        if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() &&
                                       j.get<std::int64_t>() < 0))
            fail(path, "expected a non-negative integer");
        return j.get<std::uint64_t>();
    }

    std::string str(const json& j, const std::string& path) const {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    const json& arr(const json& j, const std::string& path) const {
        if (!j.is_array()) fail(path, "expected an array");
        return j;
    }
};

void read_disturbance(const Loader& L, const json& j, const std::string& p,
                      DisturbanceConfig& d) {
    L.check_keys(j, p, {"noise_sigma_factor", "failure_prob", "repair_min", "repair_max",
                        "max_failures"});
    if (L.has(j, "noise_sigma_factor")) d.noise_sigma_factor = L.num(j["noise_sigma_factor"], p + ".noise_sigma_factor");
    if (L.has(j, "failure_prob")) d.failure_prob = L.num(j["failure_prob"], p + ".failure_prob");
    if (L.has(j, "repair_min")) d.repair_min = L.num(j["repair_min"], p + ".repair_min");
    if (L.has(j, "repair_max")) d.repair_max = L.num(j["repair_max"], p + ".repair_max");
    if (L.has(j, "max_failures")) d.max_failures = L.integer(j["max_failures"], p + ".max_failures");
}

void read_agent(const Loader& L, const json& j, const std::string& p, AgentConfig& a) {
    L.check_keys(j, p, {"gamma", "tau", "actor_lr", "critic_lr", "batch_size",
                        "updates_per_step", "replay_capacity", "replay_min", "hidden",
                        "sigma_start", "sigma_end", "sigma_decay_episodes",
                        "checkpoint_every"});
    if (L.has(j, "gamma")) a.gamma = L.num(j["gamma"], p + ".gamma");
    if (L.has(j, "tau")) a.tau = L.num(j["tau"], p + ".tau");
    if (L.has(j, "actor_lr")) a.actor_lr = L.num(j["actor_lr"], p + ".actor_lr");
    if (L.has(j, "critic_lr")) a.critic_lr = L.num(j["critic_lr"], p + ".critic_lr");
    if (L.has(j, "batch_size")) a.batch_size = L.integer(j["batch_size"], p + ".batch_size");
    if (L.has(j, "updates_per_step")) a.updates_per_step = L.integer(j["updates_per_step"], p + ".updates_per_step");
    if (L.has(j, "replay_capacity")) a.replay_capacity = L.integer(j["replay_capacity"], p + ".replay_capacity");
    if (L.has(j, "replay_min")) a.replay_min = L.integer(j["replay_min"], p + ".replay_min");
    if (L.has(j, "hidden")) a.hidden = L.integer(j["hidden"], p + ".hidden");
    if (L.has(j, "sigma_start")) a.sigma_start = L.num(j["sigma_start"], p + ".sigma_start");
    if (L.has(j, "sigma_end")) a.sigma_end = L.num(j["sigma_end"], p + ".sigma_end");
    if (L.has(j, "sigma_decay_episodes")) a.sigma_decay_episodes = L.integer(j["sigma_decay_episodes"], p + ".sigma_decay_episodes");
    if (L.has(j, "checkpoint_every")) a.checkpoint_every = L.integer(j["checkpoint_every"], p + ".checkpoint_every");
}

StageTemplate read_stage(const Loader& L, const json& j, const std::string& p) {
    L.check_keys(j, p, {"name", "base_seg", "energy", "knot_min", "knot_max", "coupling"});
    StageTemplate t;
    t.name = L.str(L.at(j, p, "name"), p + ".name");
    for (size_t i = 0; i < L.arr(L.at(j, p, "base_seg"), p + ".base_seg").size(); ++i)
        t.base_seg.push_back(L.num(j["base_seg"][i], p + ".base_seg[" + std::to_string(i) + "]"));
    const json& e = L.at(j, p, "energy");
    L.check_keys(e, p + ".energy", {"a", "b", "c"});
    t.energy_a = L.num(L.at(e, p + ".energy", "a"), p + ".energy.a");
    t.energy_b = L.num(L.at(e, p + ".energy", "b"), p + ".energy.b");
    t.energy_c = L.num(L.at(e, p + ".energy", "c"), p + ".energy.c");
    t.knot_min = L.num(L.at(j, p, "knot_min"), p + ".knot_min");
    t.knot_max = L.num(L.at(j, p, "knot_max"), p + ".knot_max");
    if (L.has(j, "coupling")) {
        const json& rows = L.arr(j["coupling"], p + ".coupling");
        for (size_t r = 0; r < rows.size(); ++r) {
            std::string rp = p + ".coupling[" + std::to_string(r) + "]";
            L.check_keys(rows[r], rp, {"w", "rhs"});
            CouplingRow row;
            const json& w = L.arr(L.at(rows[r], rp, "w"), rp + ".w");
            for (size_t i = 0; i < w.size(); ++i)
                row.w.push_back(L.num(w[i], rp + ".w[" + std::to_string(i) + "]"));
            row.rhs = L.num(L.at(rows[r], rp, "rhs"), rp + ".rhs");
            t.coupling.push_back(std::move(row));
        }
    }
    return t;
}

void read_norm_block(const Loader& L, const json& j, const std::string& p,
                     ExperimentConfig& cfg) {
    L.check_keys(j, p, {"rollouts", "seed", "stats"});
    if (L.has(j, "rollouts")) cfg.norm_rollouts = L.integer(j["rollouts"], p + ".rollouts");
    if (L.has(j, "seed")) cfg.norm_seed = L.uinteger(j["seed"], p + ".seed");
    if (!L.has(j, "stats")) return;
    const json& stats = j["stats"];
    if (!stats.is_object()) L.fail(p + ".stats", "expected an object keyed by scale label");
    for (auto it = stats.begin(); it != stats.end(); ++it) {
        std::string sp = p + ".stats." + it.key();
        L.check_keys(*it, sp, {"makespan", "energy"});
        NormEntry e;
        for (auto [field, out] : {std::pair{"makespan", &e.makespan}, {"energy", &e.energy}}) {
            std::string fp = sp + "." + field;
            const json& f = L.at(*it, sp, field);
            L.check_keys(f, fp, {"mean", "std"});
            out->mean = L.num(L.at(f, fp, "mean"), fp + ".mean");
            out->stdev = L.num(L.at(f, fp, "std"), fp + ".std");
        }
        cfg.norm_stats[it.key()] = e;
    }
}

void read_robustness(const Loader& L, const json& j, const std::string& p,
                     RobustnessConfig& r) {
    L.check_keys(j, p, {"noise_levels", "failure_probs", "eval_episodes"});
    if (L.has(j, "noise_levels")) {
        r.noise_levels.clear();
        const json& a = L.arr(j["noise_levels"], p + ".noise_levels");
        for (size_t i = 0; i < a.size(); ++i)
            r.noise_levels.push_back(L.num(a[i], p + ".noise_levels[" + std::to_string(i) + "]"));
    }
    if (L.has(j, "failure_probs")) {
        r.failure_probs.clear();
        const json& a = L.arr(j["failure_probs"], p + ".failure_probs");
        for (size_t i = 0; i < a.size(); ++i)
            r.failure_probs.push_back(L.num(a[i], p + ".failure_probs[" + std::to_string(i) + "]"));
    }
    if (L.has(j, "eval_episodes")) r.eval_episodes = L.integer(j["eval_episodes"], p + ".eval_episodes");
}

bool on_alpha_grid(double alpha) {
    int k = static_cast<int>(std::lround(alpha * 10.0));
    return k >= 1 && k <= 9 && std::fabs(alpha - k / 10.0) <= 1e-9;
}

void validate(const Loader& L, ExperimentConfig& cfg) {
    if (cfg.version != 1) L.fail("version", "unsupported config version (expected 1)");
    if (!on_alpha_grid(cfg.alpha))
        L.fail("alpha", "must lie on the grid {0.1, 0.2, ..., 0.9}");
    if (cfg.seeds.empty()) L.fail("seeds", "at least one seed required");
    if (cfg.episodes < 1) L.fail("episodes", "must be at least 1");
    if (cfg.step_limit < 1) L.fail("step_limit", "must be at least 1");
    if (cfg.timing != "none" && cfg.timing != "wall")
        L.fail("timing", "expected \"none\" or \"wall\"");
    if (cfg.dispatch_mode != "greedy" && cfg.dispatch_mode != "exact")
        L.fail("dispatch_mode", "expected \"greedy\" or \"exact\"");

    const DisturbanceConfig& d = cfg.disturbance;
    if (d.noise_sigma_factor < 0) L.fail("disturbance.noise_sigma_factor", "must be >= 0");
    if (d.failure_prob < 0 || d.failure_prob > 1)
        L.fail("disturbance.failure_prob", "must lie in [0, 1]");
    if (d.repair_min <= 0 || d.repair_max < d.repair_min)
        L.fail("disturbance.repair_min", "need 0 < repair_min <= repair_max");
    if (d.max_failures < 0) L.fail("disturbance.max_failures", "must be >= 0");

    const AgentConfig& a = cfg.agent;
    if (a.gamma <= 0 || a.gamma > 1) L.fail("agent.gamma", "must lie in (0, 1]");
    if (a.tau <= 0 || a.tau > 1) L.fail("agent.tau", "must lie in (0, 1]");
    if (a.actor_lr <= 0) L.fail("agent.actor_lr", "must be > 0");
    if (a.critic_lr <= 0) L.fail("agent.critic_lr", "must be > 0");
    if (a.batch_size < 1) L.fail("agent.batch_size", "must be at least 1");
    if (a.updates_per_step < 0) L.fail("agent.updates_per_step", "must be >= 0");
    if (a.replay_min < a.batch_size)
        L.fail("agent.replay_min", "must be at least batch_size");
    if (a.replay_capacity < a.replay_min)
        L.fail("agent.replay_capacity", "must be at least replay_min");
    if (a.hidden < 1) L.fail("agent.hidden", "must be at least 1");
    if (a.sigma_end < 0 || a.sigma_start < a.sigma_end)
        L.fail("agent.sigma_start", "need sigma_start >= sigma_end >= 0");
    if (a.sigma_decay_episodes < 1) L.fail("agent.sigma_decay_episodes", "must be at least 1");
    if (a.checkpoint_every < 1) L.fail("agent.checkpoint_every", "must be at least 1");

    if (static_cast<int>(cfg.stages.size()) != ProblemScale::stage_count)
        L.fail("stages", "expected exactly " + std::to_string(ProblemScale::stage_count) +
                             " stages");
    size_t knots = cfg.stages.front().base_seg.size();
    for (size_t s = 0; s < cfg.stages.size(); ++s) {
        const StageTemplate& t = cfg.stages[s];
        std::string p = "stages[" + std::to_string(s) + "]";
        if (t.name.empty()) L.fail(p + ".name", "must be non-empty");
        if (t.base_seg.empty()) L.fail(p + ".base_seg", "must be non-empty");
        if (t.base_seg.size() != knots)
            L.fail(p + ".base_seg", "all stages must share one knot dimension");
        for (size_t i = 0; i < t.base_seg.size(); ++i)
            if (!(t.base_seg[i] > 0))
                L.fail(p + ".base_seg[" + std::to_string(i) + "]", "must be > 0");
        if (!(t.energy_a > 0)) L.fail(p + ".energy.a", "must be > 0");
        if (!(t.energy_b > 0)) L.fail(p + ".energy.b", "must be > 0");
        if (t.energy_c < 0) L.fail(p + ".energy.c", "must be >= 0");
        if (!(t.knot_min > 0)) L.fail(p + ".knot_min", "must be > 0");
        if (t.knot_min > t.knot_max) L.fail(p + ".knot_min", "empty knot box");
        // The box center anchors the masked repair and certifies a strictly
        // interior point, so every coupling row must leave it strictly inside.
        if (!(t.knot_min < t.knot_max))
            L.fail(p + ".knot_min", "degenerate knot box has no interior point");
        double center = 0.5 * (t.knot_min + t.knot_max);
        for (size_t r = 0; r < t.coupling.size(); ++r) {
            const CouplingRow& row = t.coupling[r];
            std::string rp = p + ".coupling[" + std::to_string(r) + "]";
            if (row.w.size() != knots)
                L.fail(rp + ".w", "weight count must match the knot dimension");
            double wc = 0.0;
            bool any = false;
            for (double w : row.w) {
                wc += w * center;
                if (w != 0.0) any = true;
            }
            if (!any) L.fail(rp + ".w", "all-zero row");
            if (!(wc < row.rhs))
                L.fail(rp, "row excludes the knot-box center (repair anchor)");
        }
    }

    if (cfg.norm_rollouts < 2) L.fail("norm_stats.rollouts", "must be at least 2");
    for (const auto& [label, e] : cfg.norm_stats) {
        std::string p = "norm_stats.stats." + label;
        if (!(e.makespan.stdev > 0)) L.fail(p + ".makespan.std", "must be > 0");
        if (!(e.energy.stdev > 0)) L.fail(p + ".energy.std", "must be > 0");
    }

    const RobustnessConfig& r = cfg.robustness;
    for (size_t i = 0; i < r.noise_levels.size(); ++i)
        if (r.noise_levels[i] < 0)
            L.fail("robustness.noise_levels[" + std::to_string(i) + "]", "must be >= 0");
    for (size_t i = 0; i < r.failure_probs.size(); ++i)
        if (r.failure_probs[i] < 0 || r.failure_probs[i] > 1)
            L.fail("robustness.failure_probs[" + std::to_string(i) + "]",
                   "must lie in [0, 1]");
    if (r.eval_episodes < 2) L.fail("robustness.eval_episodes", "must be at least 2");
}

ExperimentConfig build(const Loader& L, const json& root, const CliOverrides& ov) {
    L.check_keys(root, "$",
                 {"version", "scale", "alpha", "seeds", "episodes", "step_limit", "timing",
                  "out_dir", "dispatch_mode", "disturbance", "agent", "stages",
                  "norm_stats", "robustness", "checkpoint"});
    ExperimentConfig cfg;
    cfg.version = L.integer(L.at(root, "$", "version"), "version");
    std::string label = L.str(L.at(root, "$", "scale"), "scale");
    cfg.alpha = L.num(L.at(root, "$", "alpha"), "alpha");
    const json& seeds = L.arr(L.at(root, "$", "seeds"), "seeds");
    for (size_t i = 0; i < seeds.size(); ++i)
        cfg.seeds.push_back(L.uinteger(seeds[i], "seeds[" + std::to_string(i) + "]"));
    cfg.episodes = L.integer(L.at(root, "$", "episodes"), "episodes");
    if (L.has(root, "step_limit")) cfg.step_limit = L.integer(root["step_limit"], "step_limit");
    if (L.has(root, "timing")) cfg.timing = L.str(root["timing"], "timing");
    if (L.has(root, "out_dir")) cfg.out_dir = L.str(root["out_dir"], "out_dir");
    if (L.has(root, "dispatch_mode")) cfg.dispatch_mode = L.str(root["dispatch_mode"], "dispatch_mode");
    if (L.has(root, "disturbance")) read_disturbance(L, root["disturbance"], "disturbance", cfg.disturbance);
    if (L.has(root, "agent")) read_agent(L, root["agent"], "agent", cfg.agent);
    const json& stages = L.arr(L.at(root, "$", "stages"), "stages");
    for (size_t s = 0; s < stages.size(); ++s)
        cfg.stages.push_back(read_stage(L, stages[s], "stages[" + std::to_string(s) + "]"));
    if (L.has(root, "norm_stats")) read_norm_block(L, root["norm_stats"], "norm_stats", cfg);
    if (L.has(root, "robustness")) read_robustness(L, root["robustness"], "robustness", cfg.robustness);
    if (L.has(root, "checkpoint")) cfg.checkpoint = L.str(root["checkpoint"], "checkpoint");

    if (ov.scale) label = *ov.scale;
    if (ov.alpha) cfg.alpha = *ov.alpha;
    if (ov.seeds) cfg.seeds = *ov.seeds;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;

    try {
        cfg.scale = ProblemScale::parse(label);
    } catch (const std::exception& e) {
        L.fail("scale", e.what());
    }
    validate(L, cfg);
    return cfg;
}

ExperimentConfig parse_text(const std::string& text, const CliOverrides& ov,
                            const std::string& display) {
    Loader L{display};
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte);
        throw ConfigError(display + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": " + e.what());
    }
    return build(L, root, ov);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const CliOverrides& overrides,
                              const std::string& display_name) {
    return parse_text(text, overrides, display_name);
}

ExperimentConfig load_config(const std::string& path, const CliOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), overrides, path);
}

Instance make_instance(const ExperimentConfig& cfg) {
    return Instance{cfg.scale, cfg.stages};
}

RewardWeights resolve_weights(ExperimentConfig& cfg) {
    RewardWeights w;
    w.alpha = cfg.alpha;
    auto it = cfg.norm_stats.find(cfg.scale.label);
    if (it != cfg.norm_stats.end()) {
        w.makespan = it->second.makespan;
        w.energy = it->second.energy;
        return w;
    }
    RewardWeights fresh = compute_norm_stats(make_instance(cfg), cfg.norm_rollouts, cfg.norm_seed);
    w.makespan = fresh.makespan;
    w.energy = fresh.energy;
    cfg.norm_stats[cfg.scale.label] = {w.makespan, w.energy};

    // Recorded beside the outputs so a rerun can pin the exact normalization;
    // the input config is never rewritten.
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/norm_stats_" + cfg.scale.label + ".json");
    if (out) {
        char buf[400];
        std::snprintf(buf, sizeof(buf),
                      "{\n  \"%s\": {\n"
                      "    \"makespan\": {\"mean\": %.17g, \"std\": %.17g},\n"
                      "    \"energy\": {\"mean\": %.17g, \"std\": %.17g}\n  }\n}\n",
                      cfg.scale.label.c_str(), w.makespan.mean, w.makespan.stdev,
                      w.energy.mean, w.energy.stdev);
        out << buf;
    }
    return w;
}

}  // namespace lirl
