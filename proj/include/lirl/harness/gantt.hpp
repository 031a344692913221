#pragma once

#include <string>
#include <vector>

#include "lirl/env/env.hpp"

namespace lirl {

struct GanttOutput {
    std::string svg;
    std::string table;
};

// Renders a completed schedule: one lane per robot, bars colored by job,
// repair intervals hatched, time axis in seconds. The table lists the same
// events as fixed-width text. Throws on an empty schedule.
GanttOutput emit_gantt(const EpisodeRecord& record, int robots);

// Busy time / makespan per robot. Repair intervals count as downtime.
// Throws on an empty schedule or zero makespan.
std::vector<double> utilization(const EpisodeRecord& record, int robots);

}  // namespace lirl
