#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lirl {

struct MetricsRow {
    std::string run_id;
    std::string method;  // lirl | mask | energy_opt | time_opt
    std::uint64_t seed = 0;
    int episode = 0;
    double reward = 0.0;
    double makespan_s = 0.0;
    double energy_j = 0.0;
    int violations = 0;
    double qp_iterations_mean = 0.0;
    double wallclock_ms = 0.0;
};

// Fixed column order; doubles printed with %.17g so a reread is bit-exact.
extern const char* const kMetricsHeader;

class MetricsWriter {
  public:
    explicit MetricsWriter(const std::string& path);  // writes the header
    ~MetricsWriter();
    void append(const MetricsRow& row);
    void flush();

  private:
    struct Impl;
    Impl* impl_;
};

std::string format_row(const MetricsRow& row);
std::vector<MetricsRow> read_metrics(const std::string& path);

}  // namespace lirl
