#include "lirl/harness/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "json.hpp"
#include "lirl/agent/ddpg.hpp"
#include "lirl/baselines/baselines.hpp"
#include "lirl/harness/gantt.hpp"
#include "lirl/harness/stats.hpp"

namespace lirl {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr int kWindow = 20;

std::string alpha_tag(double alpha) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "a%g", alpha);
    return buf;
}

std::string run_name(const std::string& method, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
    return method + "_" + cfg.scale.label + "_" + alpha_tag(cfg.alpha) + "_s" +
           std::to_string(seed);
}

MetricsRow row_from(const std::string& run_id, const std::string& method,
                    std::uint64_t seed, const EpisodeStats& st) {
    MetricsRow r;
    r.run_id = run_id;
    r.method = method;
    r.seed = seed;
    r.episode = st.episode;
    r.reward = st.reward;
    r.makespan_s = st.makespan;
    r.energy_j = st.energy;
    r.violations = st.violations;
    r.qp_iterations_mean = st.qp_iter_mean;
    r.wallclock_ms = st.wallclock_ms;
    return r;
}

ordered_json summarize(const std::vector<MetricsRow>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const MetricsRow*>> groups;
    for (const MetricsRow& r : rows) {
        auto [it, fresh] = groups.try_emplace(r.run_id);
        if (fresh) order.push_back(r.run_id);
        it->second.push_back(&r);
    }

    ordered_json per_run = ordered_json::object();
    // per method: converged (or overall) reward means and convergence episodes
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_method;
    for (const std::string& id : order) {
        const auto& g = groups[id];
        std::vector<double> rewards, makespans, energies, qps;
        int violations = 0;
        for (const MetricsRow* r : g) {
            rewards.push_back(r->reward);
            makespans.push_back(r->makespan_s);
            energies.push_back(r->energy_j);
            qps.push_back(r->qp_iterations_mean);
            violations += r->violations;
        }
        ordered_json e;
        e["method"] = g.front()->method;
        e["seed"] = g.front()->seed;
        e["episodes"] = static_cast<int>(rewards.size());
        e["reward_final"] = rewards.back();
        e["reward_mean"] = mean_of(rewards);
        e["makespan_mean"] = mean_of(makespans);
        e["energy_mean"] = mean_of(energies);
        e["violations"] = violations;
        e["qp_iterations_mean"] = mean_of(qps);
        double headline = mean_of(rewards);
        int n = static_cast<int>(rewards.size());
        if (n > kWindow) {
            int conv = convergence_episode(rewards, kWindow);
            e["convergence_episode"] = conv;
            // an unstable series falls back to the final window, the same
            // segment that defines the stability target
            int start = conv < n ? conv : n - kWindow;
            std::vector<double> tail(rewards.begin() + start, rewards.end());
            headline = mean_of(tail);
            e["converged_reward_mean"] = headline;
            by_method[g.front()->method].second.push_back(conv);
        }
        by_method[g.front()->method].first.push_back(headline);
        per_run[id] = std::move(e);
    }

    ordered_json per_method = ordered_json::object();
    for (const auto& [method, data] : by_method) {
        ordered_json m;
        m["runs"] = static_cast<int>(data.first.size());
        m["reward_mean"] = mean_of(data.first);
        if (data.first.size() >= 2) m["reward_std"] = reward_std(data.first);
        if (!data.second.empty() && data.second.size() == data.first.size())
            m["convergence_episode_mean"] = mean_of(data.second);
        per_method[method] = std::move(m);
    }

    ordered_json out;
    out["per_run"] = std::move(per_run);
    out["per_method"] = std::move(per_method);
    return out;
}

void write_summary(const ExperimentConfig& cfg, const std::string& command,
                   const std::vector<MetricsRow>& rows, ordered_json extra) {
    ordered_json s;
    s["command"] = command;
    s["scale"] = cfg.scale.label;
    s["alpha"] = cfg.alpha;
    s["seeds"] = cfg.seeds;
    s["csv_derived"] = summarize(rows);
    s["extra"] = std::move(extra);
    std::ofstream out(cfg.out_dir + "/summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json in " + cfg.out_dir);
    out << s.dump(2) << '\n';
}

Environment make_env(const ExperimentConfig& cfg, const RewardWeights& w) {
    return Environment(make_instance(cfg), cfg.disturbance, w, cfg.step_limit);
}

int cmd_train(ExperimentConfig& cfg, AgentVariant variant, const std::string& method,
              std::ostream& log) {
    RewardWeights w = resolve_weights(cfg);
    fs::create_directories(cfg.out_dir + "/checkpoints");
    MetricsWriter writer(cfg.out_dir + "/metrics.csv");
    std::vector<MetricsRow> rows;
    ordered_json extra;
    long long grad_steps = 0;
    int near_misses = 0, violations = 0;
    for (std::uint64_t seed : cfg.seeds) {
        Instance inst = make_instance(cfg);
        Environment env = make_env(cfg, w);
        DdpgAgent agent(inst, cfg.agent, seed);
        TrainOptions opt;
        opt.variant = variant;
        opt.episodes = cfg.episodes;
        opt.seed = seed;
        opt.checkpoint_dir = cfg.out_dir + "/checkpoints";
        opt.run_id = run_name(method, cfg, seed);
        opt.collect_timing = cfg.timing == "wall";
        TrainResult res = train_run(agent, env, opt);
        for (const EpisodeStats& st : res.episodes) {
            MetricsRow r = row_from(opt.run_id, method, seed, st);
            writer.append(r);
            rows.push_back(std::move(r));
        }
        grad_steps += res.gradient_steps;
        near_misses += res.total_near_misses;
        violations += res.total_violations;
        log << opt.run_id << ": " << res.episodes.size() << " episodes, final reward "
            << res.episodes.back().reward << ", violations " << res.total_violations
            << "\n";
    }
    writer.flush();
    extra["gradient_steps"] = grad_steps;
    extra["near_misses"] = near_misses;
    extra["violations"] = violations;
    write_summary(cfg, variant == AgentVariant::Projection ? "train" : "ablation", rows,
                  std::move(extra));
    return kExitOk;
}

int cmd_evaluate(ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.checkpoint.empty())
        throw ConfigError("evaluate requires \"checkpoint\" in the config");
    RewardWeights w = resolve_weights(cfg);
    fs::create_directories(cfg.out_dir);
    Instance inst = make_instance(cfg);
    MetricsWriter writer(cfg.out_dir + "/metrics.csv");
    std::vector<MetricsRow> rows;
    for (std::uint64_t seed : cfg.seeds) {
        DdpgAgent agent = DdpgAgent::load_checkpoint(cfg.checkpoint, inst, cfg.agent);
        Environment env = make_env(cfg, w);
        EvalSummary ev =
            evaluate(agent, env, cfg.robustness.eval_episodes, seed, AgentVariant::Projection);
        std::string id = run_name("eval", cfg, seed);
        for (const EpisodeStats& st : ev.episodes) {
            MetricsRow r = row_from(id, "lirl", seed, st);
            writer.append(r);
            rows.push_back(std::move(r));
        }
        log << id << ": reward " << ev.reward_mean << " +- " << ev.reward_std
            << ", makespan " << ev.makespan_mean << ", energy " << ev.energy_mean << "\n";
    }
    writer.flush();
    write_summary(cfg, "evaluate", rows, ordered_json::object());
    return kExitOk;
}

int cmd_baseline(ExperimentConfig& cfg, std::ostream& log) {
    RewardWeights w = resolve_weights(cfg);
    fs::create_directories(cfg.out_dir);
    Instance inst = make_instance(cfg);
    DispatchMode mode =
        cfg.dispatch_mode == "exact" ? DispatchMode::Exact : DispatchMode::Greedy;
    MetricsWriter writer(cfg.out_dir + "/metrics.csv");
    std::vector<MetricsRow> rows;
    for (auto [kind, method] : {std::pair{BaselineKind::EnergyOpt, "energy_opt"},
                                {BaselineKind::TimeOpt, "time_opt"}}) {
        std::vector<FixedVelocityPlan> plan = build_plan(inst, kind);
        for (std::uint64_t seed : cfg.seeds) {
            Environment env = make_env(cfg, w);
            BaselineRun br = dispatch_schedule(env, plan, mode, seed);
            std::string id = run_name(method, cfg, seed);
            MetricsRow r = row_from(id, method, seed, br.stats);
            writer.append(r);
            rows.push_back(std::move(r));
            log << id << ": reward " << br.stats.reward << ", makespan "
                << br.stats.makespan << ", energy " << br.stats.energy << "\n";
        }
    }
    writer.flush();
    write_summary(cfg, "baseline", rows, ordered_json::object());
    return kExitOk;
}

// Trains clean, then evaluates the trained agent across the disturbance grid.
// Coverage goes into "extra": it mixes CSV data with config-held norm stats.
int cmd_robustness(ExperimentConfig& cfg, std::ostream& log) {
    RewardWeights w = resolve_weights(cfg);
    fs::create_directories(cfg.out_dir + "/checkpoints");
    Instance inst = make_instance(cfg);
    MetricsWriter writer(cfg.out_dir + "/metrics.csv");
    std::vector<MetricsRow> rows;
    auto weighted = [&](double mk, double en) {
        return cfg.alpha * (mk - w.makespan.mean) / w.makespan.stdev +
               (1.0 - cfg.alpha) * (en - w.energy.mean) / w.energy.stdev;
    };
    std::vector<double> train_mk, train_en, train_wt, gen_mk, gen_en, gen_wt;
    for (std::uint64_t seed : cfg.seeds) {
        DisturbanceConfig clean;
        Environment env(inst, clean, w, cfg.step_limit);
        DdpgAgent agent(inst, cfg.agent, seed);
        TrainOptions opt;
        opt.episodes = cfg.episodes;
        opt.seed = seed;
        opt.checkpoint_dir = cfg.out_dir + "/checkpoints";
        opt.run_id = run_name("lirl", cfg, seed);
        opt.collect_timing = cfg.timing == "wall";
        TrainResult res = train_run(agent, env, opt);
        int n = static_cast<int>(res.episodes.size());
        for (int i = 0; i < n; ++i) {
            const EpisodeStats& st = res.episodes[i];
            MetricsRow r = row_from(opt.run_id, "lirl", seed, st);
            writer.append(r);
            rows.push_back(std::move(r));
            if (i >= n - 50) {
                train_mk.push_back(st.makespan);
                train_en.push_back(st.energy);
                train_wt.push_back(weighted(st.makespan, st.energy));
            }
        }
        log << opt.run_id << ": trained, final reward " << res.episodes.back().reward
            << "\n";
        auto eval_grid = [&](const std::string& tag, DisturbanceConfig d) {
            Environment genv(inst, d, w, cfg.step_limit);
            EvalSummary ev = evaluate(agent, genv, cfg.robustness.eval_episodes, seed,
                                      AgentVariant::Projection);
            std::string id = "gen_" + tag + "_" + run_name("lirl", cfg, seed);
            for (const EpisodeStats& st : ev.episodes) {
                MetricsRow r = row_from(id, "lirl", seed, st);
                writer.append(r);
                rows.push_back(std::move(r));
                gen_mk.push_back(st.makespan);
                gen_en.push_back(st.energy);
                gen_wt.push_back(weighted(st.makespan, st.energy));
            }
            log << id << ": reward " << ev.reward_mean << ", makespan " << ev.makespan_mean
                << "\n";
        };
        for (double lvl : cfg.robustness.noise_levels) {
            DisturbanceConfig d;
            d.noise_sigma_factor = lvl;
            char tag[32];
            std::snprintf(tag, sizeof(tag), "n%g", lvl);
            eval_grid(tag, d);
        }
        for (double fp : cfg.robustness.failure_probs) {
            DisturbanceConfig d;
            d.failure_prob = fp;
            char tag[32];
            std::snprintf(tag, sizeof(tag), "f%g", fp);
            eval_grid(tag, d);
        }
    }
    writer.flush();
    ordered_json extra;
    if (!gen_mk.empty()) {
        for (auto [name, tr, gn] : {std::tuple{"makespan", &train_mk, &gen_mk},
                                    {"energy", &train_en, &gen_en},
                                    {"weighted", &train_wt, &gen_wt}}) {
            CoverageResult c = coverage(*tr, *gn);
            ordered_json jc;
            jc["coverage"] = c.coverage;
            jc["mean_gap"] = c.mean_gap;
            jc["train_range"] = {c.train_min, c.train_max};
            jc["gen_range"] = {c.gen_min, c.gen_max};
            extra[name] = std::move(jc);
        }
    }
    write_summary(cfg, "robustness", rows, std::move(extra));
    return kExitOk;
}

int cmd_report(ExperimentConfig& cfg, std::ostream& log) {
    std::vector<MetricsRow> rows;
    try {
        rows = read_metrics(cfg.out_dir + "/metrics.csv");
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (rows.empty()) throw ConfigError("metrics.csv has no data rows");
    write_summary(cfg, "report", rows, ordered_json::object());
    log << "report over " << rows.size() << " rows -> " << cfg.out_dir << "/summary.json\n";
    return kExitOk;
}

int cmd_gantt(ExperimentConfig& cfg, std::ostream& log) {
    RewardWeights w = resolve_weights(cfg);
    fs::create_directories(cfg.out_dir);
    Instance inst = make_instance(cfg);
    Environment env = make_env(cfg, w);
    std::uint64_t seed = cfg.seeds.front();
    EpisodeRecord rec;
    std::string id;
    if (!cfg.checkpoint.empty()) {
        DdpgAgent agent = DdpgAgent::load_checkpoint(cfg.checkpoint, inst, cfg.agent);
        evaluate(agent, env, 1, seed, AgentVariant::Projection);
        rec = env.record();
        id = run_name("lirl", cfg, seed);
    } else {
        std::vector<FixedVelocityPlan> plan = build_plan(inst, BaselineKind::EnergyOpt);
        DispatchMode mode =
            cfg.dispatch_mode == "exact" ? DispatchMode::Exact : DispatchMode::Greedy;
        BaselineRun br = dispatch_schedule(env, plan, mode, seed);
        rec = std::move(br.record);
        id = run_name("energy_opt", cfg, seed);
    }
    GanttOutput g = emit_gantt(rec, inst.scale.robots);
    {
        std::ofstream svg(cfg.out_dir + "/gantt_" + id + ".svg");
        if (!svg) throw std::runtime_error("cannot write gantt SVG in " + cfg.out_dir);
        svg << g.svg;
        std::ofstream txt(cfg.out_dir + "/gantt_" + id + ".txt");
        txt << g.table;
    }
    std::vector<double> util = utilization(rec, inst.scale.robots);
    for (size_t k = 0; k < util.size(); ++k) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "R%zu utilization %.1f%%\n", k, util[k] * 100.0);
        log << buf;
    }
    log << "gantt_" << id << ".svg: " << rec.ops.size() << " operation bars, "
        << rec.repairs.size() << " repair intervals\n";
    return kExitOk;
}

}  // namespace

std::string summarize_rows(const std::vector<MetricsRow>& rows) {
    return summarize(rows).dump(2);
}

int run_command(const std::string& command, ExperimentConfig cfg, std::ostream& log) {
    try {
        if (command == "train") return cmd_train(cfg, AgentVariant::Projection, "lirl", log);
        if (command == "ablation") return cmd_train(cfg, AgentVariant::Masked, "mask", log);
        if (command == "evaluate") return cmd_evaluate(cfg, log);
        if (command == "baseline") return cmd_baseline(cfg, log);
        if (command == "robustness") return cmd_robustness(cfg, log);
        if (command == "report") return cmd_report(cfg, log);
        if (command == "gantt") return cmd_gantt(cfg, log);
        throw ConfigError("unknown command: " + command);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitNumericalError;
    }
}

}  // namespace lirl
