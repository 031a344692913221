#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace lirl {

// Scale labels follow the "J<jobs>R<robots>" convention.
struct ProblemScale {
    int jobs = 0;
    int robots = 0;
    std::string label;

    static constexpr int stage_count = 5;

    static ProblemScale parse(const std::string& label);
};

enum class RobotMode { Idle, Busy, Broken };

struct RobotStatus {
    RobotMode mode = RobotMode::Idle;
    double until = 0.0;  // valid for Busy/Broken
};

// One operation currently executing: job's stage job_stage[i] on this robot.
struct InFlightOp {
    int robot = -1;
    double finish = 0.0;
};

struct State {
    double clock = 0.0;
    std::vector<RobotStatus> robots;
    std::vector<int> job_stage;  // next stage index, 5 = complete
    std::vector<std::optional<InFlightOp>> in_flight;
    double makespan_acc = 0.0;
    double energy_acc = 0.0;
    int failure_count = 0;
};

// Linear coupling row w . kappa <= rhs over one stage's knots.
struct CouplingRow {
    std::vector<double> w;
    double rhs = 0.0;
};

struct StageTemplate {
    std::string name;
    std::vector<double> base_seg;     // segment base durations, seconds
    double energy_a = 0.0;            // J*s
    double energy_b = 0.0;            // J/s
    double energy_c = 0.0;            // J
    double knot_min = 0.0;
    double knot_max = 0.0;
    std::vector<CouplingRow> coupling;

    int knot_dim() const { return static_cast<int>(base_seg.size()); }
    // duration extremes over the knot box
    double t_min() const;
    double t_max() const;
};

struct Instance {
    ProblemScale scale;
    std::vector<StageTemplate> stages;  // exactly ProblemScale::stage_count
};

// Polytope slice for one stage's continuous knots:
// lower <= x <= upper and A x <= b.
struct Region {
    int dim = 0;
    std::vector<double> lower, upper;
    std::vector<std::vector<double>> A;
    std::vector<double> b;
};

struct HybridAction {
    // (job, robot) pairs; the operation is the job's current next stage
    std::vector<std::pair<int, int>> discrete;
    // one knot vector per discrete pair
    std::vector<std::vector<double>> knots;
};

struct LatentAction {
    std::vector<double> z;  // length J*K + P
};

bool evaluate_phi(const State& s, const HybridAction& a, const Instance& inst,
                  double tol = 1e-8);

// Lexicographically ordered (job, robot) pairs: job's next stage ready,
// job not in flight, robot idle.
std::vector<std::pair<int, int>> feasible_discrete(const State& s);

Region continuous_region(const StageTemplate& tmpl);

bool is_decision_point(const State& s);

State fresh_state(const ProblemScale& scale);

}  // namespace lirl
