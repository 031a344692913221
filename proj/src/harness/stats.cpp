#include "lirl/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lirl {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) throw std::runtime_error("mean of empty sample");
    double m = 0.0;
    for (double x : xs) m += x;
    return m / static_cast<double>(xs.size());
}

double sample_std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::runtime_error("sample std needs at least two values");
    const double m = mean_of(xs);
    double var = 0.0;
    for (double x : xs) var += (x - m) * (x - m);
    return std::sqrt(var / static_cast<double>(xs.size() - 1));
}

int convergence_episode(const std::vector<double>& rewards, int window) {
    const int n = static_cast<int>(rewards.size());
    if (window < 1) throw std::runtime_error("convergence window must be positive");
    if (n <= window) throw std::runtime_error("reward series no longer than the window");

    std::vector<double> smoothed(n);
    double acc = 0.0;
    for (int e = 0; e < n; ++e) {
        acc += rewards[e];
        if (e >= window) acc -= rewards[e - window];
        smoothed[e] = acc / std::min(e + 1, window);
    }
    double final_value = 0.0;
    for (int e = n - window; e < n; ++e) final_value += smoothed[e];
    final_value /= window;

    const auto [lo, hi] = std::minmax_element(smoothed.begin(), smoothed.end());
    const double band = 0.05 * (*hi - *lo);

    int e = n;
    while (e > 0 && std::abs(smoothed[e - 1] - final_value) <= band) --e;
    return e;
}

double reward_std(const std::vector<double>& final_rewards) {
    if (final_rewards.size() < 2)
        throw std::runtime_error("reward_std needs at least two seeds");
    return sample_std_of(final_rewards);
}

CoverageResult coverage(const std::vector<double>& training,
                        const std::vector<double>& generalization) {
    if (training.empty() || generalization.empty())
        throw std::runtime_error("coverage needs non-empty samples");
    CoverageResult r;
    const auto [tlo, thi] = std::minmax_element(training.begin(), training.end());
    const auto [glo, ghi] = std::minmax_element(generalization.begin(), generalization.end());
    r.train_min = *tlo;
    r.train_max = *thi;
    r.gen_min = *glo;
    r.gen_max = *ghi;
    int inside = 0;
    for (double g : generalization)
        if (g >= r.train_min && g <= r.train_max) ++inside;
    r.coverage = static_cast<double>(inside) / static_cast<double>(generalization.size());
    r.mean_gap = std::abs(mean_of(generalization) - mean_of(training));
    return r;
}

}  // namespace lirl
