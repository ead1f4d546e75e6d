#include "hest/estimator.hpp"

#include <algorithm>
#include <string>

namespace hest {

EstimatorState::EstimatorState(const NonlinearSystem& system, EstimatorConfig config,
                               VectorXd initial_estimate)
    : system_(&system), config_(std::move(config)) {
    validate(config_, system);
    if (initial_estimate.size() != system.state_dim()) {
        throw DimensionError("EstimatorState: initial estimate has wrong dimension");
    }
    estimates_.push_back(std::move(initial_estimate));
}

std::vector<Time> EstimatorState::measurement_times() const {
    std::vector<Time> times;
    times.reserve(measurements_.size());
    for (const auto& [time, value] : measurements_) times.push_back(time);
    return times;
}

Time EstimatorState::delta_at(Time t) const {
    if (t < 0 || t > current_time()) {
        throw ConfigError("delta_at: t outside [0, current_time]");
    }
    if (t == 0) return 0;
    auto it = measurements_.lower_bound(t);
    const Time last = it == measurements_.begin() ? 0 : std::prev(it)->first;
    return t - 1 - last;
}

MheProblem EstimatorState::problem_at(Time t) const {
    if (t < 0 || t > current_time()) {
        throw ConfigError("problem_at: t outside [0, current_time]");
    }
    return window_problem(t);
}

MheProblem EstimatorState::window_problem(Time t) const {
    auto it = measurements_.lower_bound(t);
    const Time last = it == measurements_.begin() ? 0 : std::prev(it)->first;
    const Time delta = t == 0 ? 0 : t - 1 - last;
    const Time window = std::min(t, config_.horizon + delta);
    const Time start = t - window;

    std::vector<VectorXd> inputs(inputs_.begin() + start, inputs_.begin() + t);
    std::vector<Measurement> meas;
    for (auto it = measurements_.lower_bound(start); it != measurements_.end() && it->first < t;
         ++it) {
        meas.push_back({it->first, it->second});
    }
    return make_problem(*system_, config_, t, start, std::move(inputs), std::move(meas),
                        estimates_[static_cast<std::size_t>(start)]);
}

EstimatorState::StepInfo EstimatorState::step(const VectorXd& u_prev,
                                              const std::vector<Measurement>& new_measurements) {
    const Time t = current_time() + 1;
    if (u_prev.size() != system_->input_dim()) {
        throw DimensionError("step: input has wrong dimension");
    }
    inputs_.push_back(u_prev);
    for (const Measurement& m : new_measurements) {
        if (m.time < 0 || m.time >= t) {
            throw ConfigError("step: measurement timestamps must lie in [0, t-1]");
        }
        if (m.value.size() != system_->output_dim()) {
            throw DimensionError("step: measurement has wrong dimension");
        }
        measurements_[m.time] = m.value;
    }

    StepInfo info;
    auto it = measurements_.lower_bound(t);
    const Time last = it == measurements_.begin() ? 0 : std::prev(it)->first;
    // With fresh information (delta = 0) the windowed problem is solved;
    // otherwise the optimum is the open-loop prediction.
    if (t - 1 - last == 0) {
        const MheProblem prob = window_problem(t);
        MheSolution sol = solve(prob, warm_start(*this, prob));
        estimates_.push_back(sol.estimate());
        info.solved = true;
        info.iterations = sol.iterations;
        info.converged = sol.converged;
        last_solution_ = std::move(sol);
    } else {
        estimates_.push_back(
            open_loop_predict(estimates_[static_cast<std::size_t>(t - 1)], u_prev, *system_));
    }
    return info;
}

WarmStart warm_start(const EstimatorState& state, const MheProblem& problem) {
    const Eigen::Index q = problem.system->disturbance_dim();
    const Time s = problem.window_start;
    const Time t = problem.current_time;

    WarmStart ws;
    ws.x_start = problem.prior;
    ws.disturbances.assign(static_cast<std::size_t>(t - s), VectorXd::Zero(q));
    if (!state.last_solution()) return ws;

    const MheSolution& prev = *state.last_solution();
    const Time prev_start = prev.window_start;
    const Time prev_end = prev.solved_at;
    if (s >= prev_start && s <= prev_end) {
        ws.x_start = prev.states[static_cast<std::size_t>(s - prev_start)];
    }
    for (Time j = std::max(s, prev_start); j < std::min(t, prev_end); ++j) {
        ws.disturbances[static_cast<std::size_t>(j - s)] =
            prev.disturbances[static_cast<std::size_t>(j - prev_start)];
    }
    return ws;
}

} // namespace hest
