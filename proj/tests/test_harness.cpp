#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "lirl/baselines/baselines.hpp"
#include "lirl/harness/config.hpp"
#include "lirl/harness/gantt.hpp"
#include "lirl/harness/metrics.hpp"
#include "lirl/harness/runner.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lirl;

namespace {

const char* kDefaultConfigPath = LIRL_SOURCE_DIR "/configs/default.json";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Unique per-case scratch directory, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               (std::string("lirl_harness_") + tag + "_" + std::to_string(++counter));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

std::string config_error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++n;
    return n;
}

bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("default config loads with frozen normalization for its scale") {
    ExperimentConfig cfg = load_config(kDefaultConfigPath);
    CHECK(cfg.scale.label == "J10R3");
    CHECK(cfg.scale.jobs == 10);
    CHECK(cfg.scale.robots == 3);
    CHECK(cfg.stages.size() == 5);
    CHECK(cfg.episodes == 300);
    CHECK(cfg.seeds.size() == 5);

    auto it = cfg.norm_stats.find("J10R3");
    REQUIRE(it != cfg.norm_stats.end());
    CHECK(it->second.makespan.stdev > 0.0);
    CHECK(it->second.energy.stdev > 0.0);

    // A stored entry is used verbatim; nothing is regenerated or written out.
    TempDir tmp("noregen");
    cfg.out_dir = tmp.str();
    RewardWeights w = resolve_weights(cfg);
    CHECK(same_bits(w.makespan.mean, it->second.makespan.mean));
    CHECK(same_bits(w.energy.stdev, it->second.energy.stdev));
    CHECK(w.alpha == cfg.alpha);
    CHECK_FALSE(fs::exists(tmp.path / "norm_stats_J10R3.json"));
}

TEST_CASE("parse errors carry file line and column") {
    const std::string bad = "{\n  \"version\": 1,\n  oops\n}";
    try {
        parse_config(bad);
        FAIL("expected a parse failure");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "<config>:3:"));
    }
    CHECK_THROWS_AS(load_config("/nonexistent/lirl.json"), ConfigError);
}

TEST_CASE("semantic errors name the offending json path") {
    const json base = json::parse(read_file(kDefaultConfigPath));

    json j = base;
    j["alpha"] = 0.55;
    CHECK(contains(config_error_of(j.dump()), "alpha: must lie on the grid"));

    j = base;
    j["badkey"] = 1;
    CHECK(contains(config_error_of(j.dump()), "$.badkey: unknown key"));

    j = base;
    j["agent"]["xyz"] = 1;
    CHECK(contains(config_error_of(j.dump()), "agent.xyz: unknown key"));

    j = base;
    j["agent"]["replay_min"] = 16;  // below batch_size
    CHECK(contains(config_error_of(j.dump()), "agent.replay_min"));

    j = base;
    j["stages"][1]["coupling"][0]["rhs"] = 2.4;  // excludes the box center
    {
        std::string msg = config_error_of(j.dump());
        CHECK(contains(msg, "stages[1].coupling[0]"));
        CHECK(contains(msg, "center"));
    }

    j = base;
    j["stages"][0]["knot_min"] = j["stages"][0]["knot_max"];
    {
        std::string msg = config_error_of(j.dump());
        CHECK(contains(msg, "stages[0].knot_min"));
        CHECK(contains(msg, "degenerate"));
    }

    j = base;
    j["stages"][2]["base_seg"] = {1.0, 1.0};
    CHECK(contains(config_error_of(j.dump()), "share one knot dimension"));
}

TEST_CASE("cli overrides replace config values before validation") {
    const std::string text = read_file(kDefaultConfigPath);

    CliOverrides ov;
    ov.scale = "J3R2";
    ov.alpha = 0.3;
    ov.seeds = std::vector<std::uint64_t>{7, 8};
    ov.out_dir = "override_out";
    ExperimentConfig cfg = parse_config(text, ov);
    CHECK(cfg.scale.jobs == 3);
    CHECK(cfg.scale.robots == 2);
    CHECK(cfg.scale.label == "J3R2");
    CHECK(cfg.alpha == doctest::Approx(0.3));
    CHECK(cfg.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(cfg.out_dir == "override_out");

    // Overridden values still go through validation.
    CliOverrides bad_alpha;
    bad_alpha.alpha = 0.37;
    CHECK_THROWS_AS(parse_config(text, bad_alpha), ConfigError);
    CliOverrides bad_scale;
    bad_scale.scale = "10x3";
    CHECK_THROWS_AS(parse_config(text, bad_scale), ConfigError);
}

TEST_CASE("metrics csv reread is bit exact") {
    TempDir tmp("metrics");
    const std::string path = tmp.str() + "/metrics.csv";

    std::vector<MetricsRow> rows;
    const double gnarly[] = {1.0 / 3.0,          -0.0, 1e-300, 1.7976931348623157e308,
                             2.2250738585072014e-308, 12345.678901234567};
    for (int i = 0; i < 6; ++i) {
        MetricsRow r;
        r.run_id = "run_" + std::to_string(i % 2);
        r.method = i % 2 ? "time_opt" : "lirl";
        r.seed = 0xDEADBEEFCAFEULL + i;
        r.episode = i;
        r.reward = gnarly[i];
        r.makespan_s = gnarly[(i + 1) % 6];
        r.energy_j = gnarly[(i + 2) % 6];
        r.violations = i;
        r.qp_iterations_mean = gnarly[(i + 3) % 6];
        r.wallclock_ms = gnarly[(i + 4) % 6];
        rows.push_back(r);
    }

    {
        MetricsWriter w(path);
        for (const MetricsRow& r : rows) w.append(r);
    }
    const std::string text = read_file(path);
    CHECK(text.rfind(kMetricsHeader, 0) == 0);

    std::vector<MetricsRow> back = read_metrics(path);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].run_id == rows[i].run_id);
        CHECK(back[i].method == rows[i].method);
        CHECK(back[i].seed == rows[i].seed);
        CHECK(back[i].episode == rows[i].episode);
        CHECK(back[i].violations == rows[i].violations);
        CHECK(same_bits(back[i].reward, rows[i].reward));
        CHECK(same_bits(back[i].makespan_s, rows[i].makespan_s));
        CHECK(same_bits(back[i].energy_j, rows[i].energy_j));
        CHECK(same_bits(back[i].qp_iterations_mean, rows[i].qp_iterations_mean));
        CHECK(same_bits(back[i].wallclock_ms, rows[i].wallclock_ms));
    }

    CHECK(format_row(rows[0]) == format_row(back[0]));
}

TEST_CASE("summary text is invariant under csv reread") {
    std::vector<MetricsRow> rows;
    for (int run = 0; run < 2; ++run) {
        for (int ep = 0; ep < 25; ++ep) {
            MetricsRow r;
            r.run_id = "lirl_s" + std::to_string(run);
            r.method = "lirl";
            r.seed = run;
            r.episode = ep;
            r.reward = ep < 10 ? 0.1 * ep + 0.01 * run : 1.0 + 0.01 * run;
            r.makespan_s = 100.0 - ep;
            r.energy_j = 2000.0 + 3.0 * ep;
            r.qp_iterations_mean = 4.5;
            r.wallclock_ms = 12.25;
            rows.push_back(r);
        }
    }
    const std::string direct = summarize_rows(rows);

    TempDir tmp("summary");
    const std::string path = tmp.str() + "/metrics.csv";
    {
        MetricsWriter w(path);
        for (const MetricsRow& r : rows) w.append(r);
    }
    const std::string reread = summarize_rows(read_metrics(path));
    CHECK(direct == reread);
    CHECK(contains(direct, "convergence_episode"));
}

TEST_CASE("gantt svg marks operations and repairs") {
    RewardWeights w = test_fixture::raw_weights();

    SUBCASE("clean two job two robot schedule") {
        Instance inst = test_fixture::default_instance(2, 2);
        Environment env(inst, DisturbanceConfig{}, w);
        BaselineRun run =
            dispatch_schedule(env, build_plan(inst, BaselineKind::TimeOpt), DispatchMode::Greedy, 0);
        REQUIRE(run.record.ops.size() == 10);

        GanttOutput g = emit_gantt(run.record, 2);
        CHECK(count_of(g.svg, "class=\"op\"") == 10);
        CHECK(count_of(g.svg, "class=\"repair\"") == 0);
        CHECK_FALSE(g.table.empty());

        // identical jobs on separate robots leave no idle time
        std::vector<double> u = utilization(run.record, 2);
        REQUIRE(u.size() == 2);
        CHECK(u[0] == doctest::Approx(1.0));
        CHECK(u[1] == doctest::Approx(1.0));
    }

    SUBCASE("an unused robot shows zero utilization") {
        Instance inst = test_fixture::default_instance(1, 2);
        Environment env(inst, DisturbanceConfig{}, w);
        BaselineRun run = dispatch_schedule(env, build_plan(inst, BaselineKind::EnergyOpt),
                                            DispatchMode::Greedy, 0);
        std::vector<double> u = utilization(run.record, 2);
        REQUIRE(u.size() == 2);
        const double lo = std::min(u[0], u[1]), hi = std::max(u[0], u[1]);
        CHECK(lo == doctest::Approx(0.0));
        CHECK(hi == doctest::Approx(1.0));
    }

    SUBCASE("repairs render as hatched spans") {
        Instance inst = test_fixture::default_instance(2, 1);
        DisturbanceConfig disturb;
        disturb.failure_prob = 1.0;
        disturb.max_failures = 3;
        Environment env(inst, disturb, w);
        BaselineRun run = dispatch_schedule(env, build_plan(inst, BaselineKind::TimeOpt),
                                            DispatchMode::Greedy, 11);
        REQUIRE(run.record.repairs.size() == 3);

        GanttOutput g = emit_gantt(run.record, 1);
        CHECK(count_of(g.svg, "class=\"repair\"") == 3);
        CHECK(contains(g.svg, "url(#hatch)"));
        CHECK(contains(g.svg, "pattern id=\"hatch\""));
    }

    SUBCASE("an empty schedule is rejected") {
        EpisodeRecord empty;
        CHECK_THROWS_AS(emit_gantt(empty, 1), std::invalid_argument);
        CHECK_THROWS_AS(utilization(empty, 1), std::invalid_argument);
    }
}

TEST_CASE("run_command maps failures to exit codes") {
    TempDir tmp("exitcodes");
    CliOverrides ov;
    ov.out_dir = tmp.str();
    ExperimentConfig cfg = load_config(kDefaultConfigPath, ov);
    std::ostringstream log;

    CHECK(run_command("no_such_command", cfg, log) == kExitConfigError);
    CHECK(contains(log.str(), "unknown command"));

    // report demands an existing metrics.csv in out_dir
    CHECK(run_command("report", cfg, log) == kExitConfigError);
}

TEST_CASE("baseline command output is deterministic") {
    CliOverrides ov;
    ov.scale = "J3R2";
    ov.seeds = std::vector<std::uint64_t>{0, 1};

    std::string first, second;
    for (int pass = 0; pass < 2; ++pass) {
        TempDir tmp(pass == 0 ? "base_a" : "base_b");
        CliOverrides run_ov = ov;
        run_ov.out_dir = tmp.str();
        ExperimentConfig cfg = load_config(kDefaultConfigPath, run_ov);
        std::ostringstream log;
        REQUIRE(run_command("baseline", cfg, log) == kExitOk);
        CHECK(fs::exists(tmp.path / "summary.json"));
        // J3R2 has no stored stats, so the run records the regenerated entry
        CHECK(fs::exists(tmp.path / "norm_stats_J3R2.json"));
        (pass == 0 ? first : second) = read_file(tmp.str() + "/metrics.csv");
    }
    REQUIRE_FALSE(first.empty());
    CHECK(first == second);
}

TEST_CASE("missing norm stats regenerate deterministically") {
    const std::string text = read_file(kDefaultConfigPath);
    TempDir tmp("regen");

    CliOverrides ov;
    ov.scale = "J2R2";
    ov.out_dir = tmp.str();
    ExperimentConfig a = parse_config(text, ov);
    ExperimentConfig b = parse_config(text, ov);
    RewardWeights wa = resolve_weights(a);
    RewardWeights wb = resolve_weights(b);
    CHECK(same_bits(wa.makespan.mean, wb.makespan.mean));
    CHECK(same_bits(wa.makespan.stdev, wb.makespan.stdev));
    CHECK(same_bits(wa.energy.mean, wb.energy.mean));
    CHECK(same_bits(wa.energy.stdev, wb.energy.stdev));
    CHECK(wa.makespan.stdev > 0.0);
    CHECK(wa.energy.stdev > 0.0);

    // regeneration caches the entry and records it beside the run outputs
    CHECK(a.norm_stats.count("J2R2") == 1);
    CHECK(fs::exists(tmp.path / "norm_stats_J2R2.json"));
    const std::string recorded = read_file((tmp.path / "norm_stats_J2R2.json").string());
    CHECK(contains(recorded, "makespan"));
    CHECK(contains(recorded, "energy"));
}
