#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lirl/harness/config.hpp"
#include "lirl/harness/metrics.hpp"

namespace lirl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalError = 3;

// JSON text of the summary block derivable from CSV rows alone; the report
// command and the written summary.json both come from this one function so
// a reread of metrics.csv reproduces the summary exactly.
std::string summarize_rows(const std::vector<MetricsRow>& rows);

// Runs one command (train, evaluate, baseline, ablation, robustness, report,
// gantt) over all configured seeds. Progress goes to log; files land under
// cfg.out_dir. Returns a CLI exit code.
int run_command(const std::string& command, ExperimentConfig cfg, std::ostream& log);

}  // namespace lirl
