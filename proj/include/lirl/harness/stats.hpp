#pragma once

#include <vector>

namespace lirl {

double mean_of(const std::vector<double>& xs);
double sample_std_of(const std::vector<double>& xs);  // n-1 denominator

// Smallest episode e such that the trailing-window moving average stays
// within 5% of the smoothed series' span around the final value from e on.
// Returns the series length when the series never stabilizes. The span-
// relative band handles negative reward scales.
int convergence_episode(const std::vector<double>& rewards, int window = 20);

// Sample std of per-seed post-convergence mean rewards.
double reward_std(const std::vector<double>& final_rewards);

struct CoverageResult {
    double coverage = 0.0;  // fraction of generalization samples inside the training range
    double mean_gap = 0.0;  // |mean(generalization) - mean(training)|
    double train_min = 0.0, train_max = 0.0;
    double gen_min = 0.0, gen_max = 0.0;
};

CoverageResult coverage(const std::vector<double>& training,
                        const std::vector<double>& generalization);

}  // namespace lirl
