#include "lirl/harness/gantt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace lirl {

namespace {

constexpr const char* kPalette[] = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
};
constexpr int kPaletteSize = 10;

double schedule_makespan(const EpisodeRecord& rec) {
    double m = 0.0;
    for (const auto& op : rec.ops) m = std::max(m, op.end);
    for (const auto& rp : rec.repairs) m = std::max(m, rp.end);
    return m;
}

void check_schedule(const EpisodeRecord& rec, int robots) {
    if (rec.ops.empty()) throw std::invalid_argument("empty schedule");
    if (robots < 1) throw std::invalid_argument("robot count must be positive");
    for (const auto& op : rec.ops) {
        if (op.robot < 0 || op.robot >= robots)
            throw std::invalid_argument("operation robot index out of range");
        if (op.end < op.start) throw std::invalid_argument("operation ends before it starts");
    }
    for (const auto& rp : rec.repairs) {
        if (rp.robot < 0 || rp.robot >= robots)
            throw std::invalid_argument("repair robot index out of range");
        if (rp.end < rp.start) throw std::invalid_argument("repair ends before it starts");
    }
}

// 1/2/5 ladder so axis labels land on round numbers.
double nice_step(double span, int target_ticks) {
    double raw = span / target_ticks;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double norm = raw / mag;
    double step = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
    return step * mag;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string render_svg(const EpisodeRecord& rec, int robots, double makespan) {
    const double left = 70, right = 20, top = 20, bottom = 45;
    const double lane_h = 26, lane_gap = 10;
    const double plot_w = 860;
    const double width = left + plot_w + right;
    const double height = top + robots * lane_h + (robots - 1) * lane_gap + bottom;
    const double sx = plot_w / makespan;
    auto lane_y = [&](int k) { return top + k * (lane_h + lane_gap); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
       << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' '
       << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" "
          "patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">"
          "<rect width=\"6\" height=\"6\" fill=\"#f6d5d5\"/>"
          "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#a33333\" "
          "stroke-width=\"2\"/></pattern></defs>\n";
    os << "<rect width=\"" << fmt(width) << "\" height=\"" << fmt(height)
       << "\" fill=\"white\"/>\n";

    for (int k = 0; k < robots; ++k) {
        double y = lane_y(k);
        os << "<text x=\"" << fmt(left - 8) << "\" y=\"" << fmt(y + lane_h * 0.65)
           << "\" text-anchor=\"end\">R" << k << "</text>\n";
        os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(y + lane_h) << "\" x2=\""
           << fmt(left + plot_w) << "\" y2=\"" << fmt(y + lane_h)
           << "\" stroke=\"#ddd\"/>\n";
    }

    for (const auto& rp : rec.repairs) {
        double y = lane_y(rp.robot);
        os << "<rect class=\"repair\" x=\"" << fmt(left + rp.start * sx) << "\" y=\""
           << fmt(y) << "\" width=\"" << fmt((rp.end - rp.start) * sx) << "\" height=\""
           << fmt(lane_h) << "\" fill=\"url(#hatch)\" stroke=\"#a33333\">"
           << "<title>repair R" << rp.robot << ' ' << fmt(rp.start) << "-" << fmt(rp.end)
           << " s</title></rect>\n";
    }
    for (const auto& op : rec.ops) {
        double y = lane_y(op.robot);
        os << "<rect class=\"op\" x=\"" << fmt(left + op.start * sx) << "\" y=\"" << fmt(y)
           << "\" width=\"" << fmt((op.end - op.start) * sx) << "\" height=\""
           << fmt(lane_h) << "\" fill=\"" << kPalette[op.job % kPaletteSize]
           << "\" stroke=\"#333333\">"
           << "<title>job " << op.job << " stage " << op.stage << ", " << fmt(op.start)
           << "-" << fmt(op.end) << " s, " << fmt(op.energy) << " J</title></rect>\n";
    }

    double axis_y = top + robots * lane_h + (robots - 1) * lane_gap + 12;
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(axis_y) << "\" x2=\""
       << fmt(left + plot_w) << "\" y2=\"" << fmt(axis_y) << "\" stroke=\"#333333\"/>\n";
    double step = nice_step(makespan, 8);
    for (double t = 0.0; t <= makespan + step * 1e-9; t += step) {
        double x = left + t * sx;
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(axis_y) << "\" x2=\"" << fmt(x)
           << "\" y2=\"" << fmt(axis_y + 4) << "\" stroke=\"#333333\"/>\n";
        os << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(axis_y + 16)
           << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    }
    os << "<text x=\"" << fmt(left + plot_w / 2) << "\" y=\"" << fmt(axis_y + 32)
       << "\" text-anchor=\"middle\">time (s)</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string render_table(const EpisodeRecord& rec, int robots, double makespan) {
    std::ostringstream os;
    char buf[160];
    os << "  job  stage  robot     start_s       end_s  duration_s    energy_j\n";
    for (const auto& op : rec.ops) {
        std::snprintf(buf, sizeof(buf), "%5d  %5d  %5d  %10.3f  %10.3f  %10.3f  %10.3f\n",
                      op.job, op.stage, op.robot, op.start, op.end, op.end - op.start,
                      op.energy);
        os << buf;
    }
    if (!rec.repairs.empty()) {
        os << "repairs:\n  robot     start_s       end_s   nominal_s\n";
        for (const auto& rp : rec.repairs) {
            std::snprintf(buf, sizeof(buf), "%7d  %10.3f  %10.3f  %10.3f\n", rp.robot,
                          rp.start, rp.end, rp.nominal);
            os << buf;
        }
    }
    std::snprintf(buf, sizeof(buf), "makespan: %.3f s over %d robots\n", makespan, robots);
    os << buf;
    return os.str();
}

}  // namespace

GanttOutput emit_gantt(const EpisodeRecord& record, int robots) {
    check_schedule(record, robots);
    double makespan = schedule_makespan(record);
    if (makespan <= 0.0) throw std::invalid_argument("schedule has zero makespan");
    return {render_svg(record, robots, makespan),
            render_table(record, robots, makespan)};
}

std::vector<double> utilization(const EpisodeRecord& record, int robots) {
    check_schedule(record, robots);
    double makespan = schedule_makespan(record);
    if (makespan <= 0.0) throw std::invalid_argument("schedule has zero makespan");
    std::vector<double> busy(static_cast<size_t>(robots), 0.0);
    for (const auto& op : record.ops) busy[static_cast<size_t>(op.robot)] += op.end - op.start;
    for (auto& b : busy) b = std::min(1.0, b / makespan);
    return busy;
}

}  // namespace lirl
