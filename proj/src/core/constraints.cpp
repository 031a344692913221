#include "lirl/core/types.hpp"

#include <cctype>
#include <stdexcept>

namespace lirl {

ProblemScale ProblemScale::parse(const std::string& label) {
    auto fail = [&] {
        throw std::runtime_error("bad scale label '" + label + "', expected J<jobs>R<robots>");
    };
    if (label.size() < 4 || label[0] != 'J') fail();
    size_t i = 1;
    while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
    if (i == 1 || i >= label.size() || label[i] != 'R') fail();
    size_t j = i + 1;
    while (j < label.size() && std::isdigit(static_cast<unsigned char>(label[j]))) ++j;
    if (j != label.size() || j == i + 1) fail();
    ProblemScale ps;
    ps.jobs = std::stoi(label.substr(1, i - 1));
    ps.robots = std::stoi(label.substr(i + 1));
    ps.label = label;
    if (ps.jobs < 1 || ps.robots < 1) fail();
    return ps;
}

double StageTemplate::t_min() const {
    double t = 0.0;
    for (double s : base_seg) t += s / knot_max;
    return t;
}

double StageTemplate::t_max() const {
    double t = 0.0;
    for (double s : base_seg) t += s / knot_min;
    return t;
}

State fresh_state(const ProblemScale& scale) {
    if (scale.jobs < 1 || scale.robots < 1)
        throw std::runtime_error("scale must have at least one job and one robot");
    State s;
    s.robots.resize(scale.robots);
    s.job_stage.assign(scale.jobs, 0);
    s.in_flight.assign(scale.jobs, std::nullopt);
    return s;
}

std::vector<std::pair<int, int>> feasible_discrete(const State& s) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < static_cast<int>(s.job_stage.size()); ++i) {
        if (s.job_stage[i] >= ProblemScale::stage_count) continue;
        if (s.in_flight[i].has_value()) continue;
        for (int k = 0; k < static_cast<int>(s.robots.size()); ++k)
            if (s.robots[k].mode == RobotMode::Idle) out.emplace_back(i, k);
    }
    return out;
}

bool is_decision_point(const State& s) {
    for (int i = 0; i < static_cast<int>(s.job_stage.size()); ++i) {
        if (s.job_stage[i] >= ProblemScale::stage_count || s.in_flight[i].has_value()) continue;
        for (const auto& r : s.robots)
            if (r.mode == RobotMode::Idle) return true;
        return false;  // no idle robot for any ready job
    }
    return false;
}

Region continuous_region(const StageTemplate& tmpl) {
    if (tmpl.knot_min > tmpl.knot_max)
        throw std::runtime_error("stage '" + tmpl.name + "': knot_min > knot_max (empty region)");
    if (tmpl.knot_min <= 0.0)
        throw std::runtime_error("stage '" + tmpl.name + "': knot_min must be positive");
    Region r;
    r.dim = tmpl.knot_dim();
    r.lower.assign(r.dim, tmpl.knot_min);
    r.upper.assign(r.dim, tmpl.knot_max);
    for (const auto& row : tmpl.coupling) {
        if (static_cast<int>(row.w.size()) != r.dim)
            throw std::runtime_error("stage '" + tmpl.name + "': coupling row dimension mismatch");
        r.A.push_back(row.w);
        r.b.push_back(row.rhs);
    }
    return r;
}

bool evaluate_phi(const State& s, const HybridAction& a, const Instance& inst, double tol) {
    if (a.discrete.size() != a.knots.size()) return false;
    const int J = static_cast<int>(s.job_stage.size());
    const int K = static_cast<int>(s.robots.size());
    std::vector<bool> job_used(J, false), robot_used(K, false);
    for (size_t idx = 0; idx < a.discrete.size(); ++idx) {
        const auto [job, robot] = a.discrete[idx];
        if (job < 0 || job >= J || robot < 0 || robot >= K) return false;
        // capacity: robot idle and not doubly assigned; job not doubly assigned
        if (job_used[job] || robot_used[robot]) return false;
        job_used[job] = true;
        robot_used[robot] = true;
        if (s.robots[robot].mode != RobotMode::Idle) return false;
        // precedence: the job's next stage must be the one being dispatched,
        // the job complete or in flight means nothing is ready
        const int stage = s.job_stage[job];
        if (stage >= ProblemScale::stage_count) return false;
        if (s.in_flight[job].has_value()) return false;
        // continuous: knots inside the stage polytope within tolerance
        const StageTemplate& tmpl = inst.stages[stage];
        const auto& x = a.knots[idx];
        if (static_cast<int>(x.size()) != tmpl.knot_dim()) return false;
        for (double xi : x)
            if (xi < tmpl.knot_min - tol || xi > tmpl.knot_max + tol) return false;
        for (const auto& row : tmpl.coupling) {
            double dot = 0.0;
            for (size_t d = 0; d < row.w.size(); ++d) dot += row.w[d] * x[d];
            if (dot > row.rhs + tol) return false;
        }
    }
    return true;
}

}  // namespace lirl
