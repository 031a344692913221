#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lirl/harness/config.hpp"
#include "lirl/harness/runner.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    size_t pos = 0;
    while (pos <= csv.size()) {
        size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        std::string tok = csv.substr(pos, comma - pos);
        if (tok.empty()) throw lirl::ConfigError("--seeds: empty entry in '" + csv + "'");
        char* end = nullptr;
        unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0')
            throw lirl::ConfigError("--seeds: '" + tok + "' is not an unsigned integer");
        seeds.push_back(v);
        pos = comma + 1;
        if (comma == csv.size()) break;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"constrained scheduling RL laboratory"};
    app.require_subcommand(1);

    std::string config_path, seeds_csv, scale, out_dir;
    double alpha = 0.0;
    const std::pair<const char*, const char*> commands[] = {
        {"train", "train the projection agent over all seeds"},
        {"evaluate", "noise-free rollouts of a checkpointed agent"},
        {"baseline", "fixed-velocity hierarchical baselines"},
        {"ablation", "train the masking ablation over all seeds"},
        {"robustness", "train clean, evaluate across the disturbance grid"},
        {"report", "recompute summary.json from an existing metrics.csv"},
        {"gantt", "render one schedule as SVG and text"},
    };
    for (auto [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "experiment config JSON")->required();
        sub->add_option("--seeds", seeds_csv, "comma-separated seed override, e.g. 0,1,2");
        sub->add_option("--alpha", alpha, "objective weight override");
        sub->add_option("--scale", scale, "problem scale override, e.g. J10R3");
        sub->add_option("--out", out_dir, "output directory override");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lirl::kExitConfigError;
    }

    CLI::App* sub = app.get_subcommands().front();
    try {
        lirl::CliOverrides ov;
        if (sub->count("--seeds")) ov.seeds = parse_seeds(seeds_csv);
        if (sub->count("--alpha")) ov.alpha = alpha;
        if (sub->count("--scale")) ov.scale = scale;
        if (sub->count("--out")) ov.out_dir = out_dir;
        lirl::ExperimentConfig cfg = lirl::load_config(config_path, ov);
        return lirl::run_command(sub->get_name(), std::move(cfg), std::cout);
    } catch (const lirl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return lirl::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return lirl::kExitNumericalError;
    }
}
