#pragma once

#include <map>
#include <optional>
#include <vector>

#include "hest/mhe.hpp"

namespace hest {

/// Receding estimator loop. Solves the windowed problem only at times where
/// a fresh measurement exists (delta_t = 0); in between, estimates advance
/// by nominal open-loop prediction, which yields the same result as solving
/// the full problem at every step.
///
/// Instances are single-owner: mutate only through step(). Distinct
/// instances share no mutable state.
class EstimatorState {
public:
    EstimatorState(const NonlinearSystem& system, EstimatorConfig config,
                   VectorXd initial_estimate);

    Time current_time() const { return static_cast<Time>(estimates_.size()) - 1; }
    const VectorXd& estimate() const { return estimates_.back(); }
    const std::vector<VectorXd>& estimate_history() const { return estimates_; }
    const std::optional<MheSolution>& last_solution() const { return last_solution_; }
    const NonlinearSystem& system() const { return *system_; }
    const EstimatorConfig& config() const { return config_; }

    /// Realized measurement times received so far.
    std::vector<Time> measurement_times() const;

    /// Steps since the last measurement before t, as seen by this estimator.
    Time delta_at(Time t) const;

    struct StepInfo {
        bool solved = false; // windowed solve vs. open-loop prediction
        int iterations = 0;
        bool converged = true;
    };

    /// Advances from t-1 to t. `new_measurements` carries outputs revealed up
    /// to (and excluding) the new time; typically the single measurement at
    /// t-1 when one exists.
    StepInfo step(const VectorXd& u_prev, const std::vector<Measurement>& new_measurements);

    /// The full estimation problem at time t <= current_time, built from the
    /// recorded inputs/measurements with the prior read from the estimate
    /// history. Exposed for diagnostics; step() solves it only when needed.
    MheProblem problem_at(Time t) const;

private:
    MheProblem window_problem(Time t) const;

    const NonlinearSystem* system_;
    EstimatorConfig config_;
    std::vector<VectorXd> estimates_; // x-hat at 0..t
    std::vector<VectorXd> inputs_;    // u at 0..t-1
    std::map<Time, VectorXd> measurements_;
    std::optional<MheSolution> last_solution_;
};

/// Initial iterate for the next windowed solve: disturbances shifted from
/// the previous optimum (zeros where the windows do not overlap) and the
/// start state taken from the previous optimal trajectory when it covers the
/// new window start, the prior otherwise.
WarmStart warm_start(const EstimatorState& state, const MheProblem& problem);

} // namespace hest
