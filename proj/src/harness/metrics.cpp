#include "lirl/harness/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lirl {

const char* const kMetricsHeader =
    "run_id,method,seed,episode,reward,makespan_s,energy_j,violations,"
    "qp_iterations_mean,wallclock_ms";

namespace {
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string format_row(const MetricsRow& r) {
    std::ostringstream os;
    os << r.run_id << ',' << r.method << ',' << r.seed << ',' << r.episode << ','
       << fmt_double(r.reward) << ',' << fmt_double(r.makespan_s) << ','
       << fmt_double(r.energy_j) << ',' << r.violations << ','
       << fmt_double(r.qp_iterations_mean) << ',' << fmt_double(r.wallclock_ms);
    return os.str();
}

struct MetricsWriter::Impl {
    std::ofstream out;
};

MetricsWriter::MetricsWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path, std::ios::trunc);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("cannot open metrics file for writing: " + path);
    }
    impl_->out << kMetricsHeader << '\n';
}

MetricsWriter::~MetricsWriter() { delete impl_; }

void MetricsWriter::append(const MetricsRow& row) {
    impl_->out << format_row(row) << '\n';
    if (!impl_->out) throw std::runtime_error("metrics write failed");
}

void MetricsWriter::flush() { impl_->out.flush(); }

std::vector<MetricsRow> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open metrics file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty metrics file: " + path);
    if (line != kMetricsHeader)
        throw std::runtime_error("unexpected metrics header in " + path);
    std::vector<MetricsRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        MetricsRow r;
        std::string field;
        auto next = [&](const char* what) {
            if (!std::getline(ss, field, ','))
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": missing field " + what);
            return field;
        };
        r.run_id = next("run_id");
        r.method = next("method");
        r.seed = std::stoull(next("seed"));
        r.episode = std::stoi(next("episode"));
        r.reward = std::stod(next("reward"));
        r.makespan_s = std::stod(next("makespan_s"));
        r.energy_j = std::stod(next("energy_j"));
        r.violations = std::stoi(next("violations"));
        r.qp_iterations_mean = std::stod(next("qp_iterations_mean"));
        r.wallclock_ms = std::stod(next("wallclock_ms"));
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace lirl
