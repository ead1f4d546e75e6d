#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hest/estimator.hpp"
#include "hest/schedule.hpp"
#include "hest/system.hpp"
#include "hest/thyroid.hpp"

namespace hest {

/// Zero or piecewise-constant input signal: the value attached to a
/// breakpoint holds from that step until the next breakpoint.
struct InputSignal {
    Eigen::Index dim = 0;
    std::vector<std::pair<Time, VectorXd>> table; // sorted by step

    static InputSignal zero(Eigen::Index dim);
    static InputSignal piecewise(Eigen::Index dim, std::vector<std::pair<Time, VectorXd>> table);
    VectorXd at(Time t) const;
};

/// Closed-loop record over steps 0..length(): states, inputs, disturbances
/// and outputs at every step, plus the availability flag marking schedule
/// times.
struct Trajectory {
    std::vector<Time> times;
    std::vector<VectorXd> states;
    std::vector<VectorXd> inputs;
    std::vector<VectorXd> disturbances;
    std::vector<VectorXd> outputs;
    std::vector<bool> available;

    Time length() const { return static_cast<Time>(times.size()) - 1; }
};

/// Exact forward recursion for `steps` transitions. Inputs and disturbances
/// need one entry per time 0..steps (the trailing entry only feeds the final
/// output). Throws ModelDomainError (with the offending step index) when a
/// state goes non-finite.
Trajectory simulate(const NonlinearSystem& sys, const VectorXd& x0,
                    const std::vector<VectorXd>& inputs,
                    const std::vector<VectorXd>& disturbances, Time steps);

/// Marks availability flags from the schedule.
void apply_schedule(Trajectory& traj, const SamplingSchedule& schedule);

/// Independent uniform draws on [-bounds_i, +bounds_i] per coordinate, one
/// vector per time 0..steps, reproducible from the seed via CounterRng.
std::vector<VectorXd> draw_disturbances(const VectorXd& bounds, Time steps, std::uint64_t seed);

/// Scheduling half of a scenario: cyclic gap pattern or explicit times.
struct ScheduleSpec {
    std::variant<GapSequence, std::vector<Time>> source;
    Time gap_offset = 1;
    std::string label;

    static ScheduleSpec from_pattern(std::vector<Time> pattern, Time offset = 1,
                                     std::string label = {});
    static ScheduleSpec from_times(std::vector<Time> times, std::string label = {});
    SamplingSchedule realize(Time last_time) const;
    /// Mean gap of the pattern (or mean consecutive difference of explicit times).
    double average_gap() const;
    std::string display_label() const;
};

/// Full specification of one closed-loop experiment.
struct Scenario {
    std::variant<LinearSystem, ThyroidParams, NonlinearSystem> plant;
    ScheduleSpec schedule = ScheduleSpec::from_pattern({1});
    VectorXd x0;
    VectorXd x0_estimate;
    InputSignal input;
    VectorXd disturbance_bounds; // per disturbance coordinate, >= 0
    Time steps = 1;
    std::uint64_t seed = 0;
    EstimatorConfig estimator;
};

NonlinearSystem build_system(const Scenario& scenario);

struct StepRecord {
    bool solved = false;
    int iterations = 0;
    bool converged = true;
};

struct ExperimentResult {
    Trajectory truth;
    std::vector<VectorXd> estimates;  // 0..steps
    std::vector<double> error_norms;  // 0..steps
    double rmse = 0.0;
    std::vector<StepRecord> step_records; // one per step 1..steps
    std::uint64_t seed = 0;
    Scenario scenario; // echo of the spec that produced this result
};

/// Simulates the plant, then replays the measurement schedule through the
/// estimator. Deterministic for a fixed scenario (seed included).
ExperimentResult run_experiment(const Scenario& scenario);

/// Root mean squared error over all steps, recomputed from the stored
/// trajectories: per-step Euclidean error norm, mean of squares, root.
double rmse(const ExperimentResult& result);

struct SweepRow {
    std::string label;
    double average_gap = 0.0;
    double mean_rmse = 0.0;
    double stddev_rmse = 0.0;
};

/// Runs the scenario once per (schedule, seed) with the run seed derived as
/// seeds[r] ^ schedule-index, and aggregates mean/stddev RMSE per schedule.
/// Replicates run concurrently; HORIZON_EST_THREADS caps the worker count
/// (machine parallelism by default). Aggregation order is deterministic.
std::vector<SweepRow> sweep_schedules(const Scenario& base,
                                      const std::vector<ScheduleSpec>& schedules,
                                      const std::vector<std::uint64_t>& seeds);

} // namespace hest
