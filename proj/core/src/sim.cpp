#include "hest/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "hest/rng.hpp"

namespace hest {

InputSignal InputSignal::zero(Eigen::Index dim) {
    InputSignal s;
    s.dim = dim;
    return s;
}

InputSignal InputSignal::piecewise(Eigen::Index dim,
                                   std::vector<std::pair<Time, VectorXd>> table) {
    InputSignal s;
    s.dim = dim;
    s.table = std::move(table);
    std::sort(s.table.begin(), s.table.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < s.table.size(); ++k) {
        if (s.table[k].second.size() != dim) {
            throw DimensionError("InputSignal: table value has wrong dimension");
        }
        if (k > 0 && s.table[k].first == s.table[k - 1].first) {
            throw ConfigError("InputSignal: duplicate breakpoint");
        }
    }
    return s;
}

VectorXd InputSignal::at(Time t) const {
    VectorXd value = VectorXd::Zero(dim);
    for (const auto& [start, v] : table) {
        if (start > t) break;
        value = v;
    }
    return value;
}

Trajectory simulate(const NonlinearSystem& sys, const VectorXd& x0,
                    const std::vector<VectorXd>& inputs,
                    const std::vector<VectorXd>& disturbances, Time steps) {
    if (steps < 0) throw ConfigError("simulate: steps must be >= 0");
    const auto needed = static_cast<std::size_t>(steps) + 1;
    if (inputs.size() < needed || disturbances.size() < needed) {
        throw DimensionError("simulate: need an input and a disturbance per time 0..steps");
    }
    Trajectory traj;
    traj.times.resize(needed);
    std::iota(traj.times.begin(), traj.times.end(), Time{0});
    traj.states.reserve(needed);
    traj.states.push_back(x0);
    traj.inputs.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(needed));
    traj.disturbances.assign(disturbances.begin(),
                             disturbances.begin() + static_cast<std::ptrdiff_t>(needed));
    traj.available.assign(needed, false);

    for (Time t = 0; t <= steps; ++t) {
        const auto k = static_cast<std::size_t>(t);
        traj.outputs.push_back(sys.output(traj.states[k], traj.inputs[k], traj.disturbances[k]));
        if (t == steps) break;
        VectorXd next = sys.transition(traj.states[k], traj.inputs[k], traj.disturbances[k]);
        if (!next.allFinite()) {
            throw ModelDomainError("simulate: state diverged (non-finite) at step " +
                                   std::to_string(t + 1));
        }
        traj.states.push_back(std::move(next));
    }
    return traj;
}

void apply_schedule(Trajectory& traj, const SamplingSchedule& schedule) {
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        traj.available[k] = schedule.contains(traj.times[k]);
    }
}

std::vector<VectorXd> draw_disturbances(const VectorXd& bounds, Time steps, std::uint64_t seed) {
    if ((bounds.array() < 0.0).any()) {
        throw ConfigError("draw_disturbances: bounds must be >= 0");
    }
    CounterRng rng(seed);
    std::vector<VectorXd> draws;
    draws.reserve(static_cast<std::size_t>(steps) + 1);
    for (Time t = 0; t <= steps; ++t) {
        VectorXd w(bounds.size());
        for (Eigen::Index i = 0; i < bounds.size(); ++i) {
            w[i] = rng.next_symmetric(bounds[i]);
        }
        draws.push_back(std::move(w));
    }
    return draws;
}

ScheduleSpec ScheduleSpec::from_pattern(std::vector<Time> pattern, Time offset,
                                        std::string label) {
    ScheduleSpec spec;
    spec.source = GapSequence(std::move(pattern));
    spec.gap_offset = offset;
    spec.label = std::move(label);
    return spec;
}

ScheduleSpec ScheduleSpec::from_times(std::vector<Time> times, std::string label) {
    ScheduleSpec spec;
    spec.source = std::move(times);
    spec.label = std::move(label);
    return spec;
}

SamplingSchedule ScheduleSpec::realize(Time last_time) const {
    if (const auto* gaps = std::get_if<GapSequence>(&source)) {
        return SamplingSchedule::from_gaps(*gaps, gap_offset, last_time);
    }
    std::vector<Time> clipped;
    for (Time t : std::get<std::vector<Time>>(source)) {
        if (t <= last_time) clipped.push_back(t);
    }
    return SamplingSchedule::from_times(std::move(clipped));
}

double ScheduleSpec::average_gap() const {
    if (const auto* gaps = std::get_if<GapSequence>(&source)) {
        return static_cast<double>(gaps->period()) /
               static_cast<double>(gaps->pattern().size());
    }
    const auto& times = std::get<std::vector<Time>>(source);
    if (times.size() < 2) return 0.0;
    return static_cast<double>(times.back() - times.front()) /
           static_cast<double>(times.size() - 1);
}

std::string ScheduleSpec::display_label() const {
    if (!label.empty()) return label;
    std::string out;
    if (const auto* gaps = std::get_if<GapSequence>(&source)) {
        for (Time d : gaps->pattern()) {
            if (!out.empty()) out += '|';
            out += std::to_string(d);
        }
        return "pattern " + out;
    }
    return "explicit times";
}

NonlinearSystem build_system(const Scenario& scenario) {
    if (const auto* lin = std::get_if<LinearSystem>(&scenario.plant)) {
        return linear_as_nonlinear(*lin);
    }
    if (const auto* thy = std::get_if<ThyroidParams>(&scenario.plant)) {
        return build_thyroid(*thy);
    }
    return std::get<NonlinearSystem>(scenario.plant);
}

ExperimentResult run_experiment(const Scenario& scenario) {
    if (scenario.steps < 1) throw ConfigError("run_experiment: steps must be >= 1");
    NonlinearSystem sys = build_system(scenario);
    validate(scenario.estimator, sys);
    if (scenario.x0.size() != sys.state_dim() || scenario.x0_estimate.size() != sys.state_dim()) {
        throw DimensionError("run_experiment: x0/x0_estimate must match the state dimension");
    }
    if (scenario.disturbance_bounds.size() != sys.disturbance_dim()) {
        throw DimensionError("run_experiment: disturbance bounds must match the disturbance "
                             "dimension");
    }
    if (scenario.input.dim != sys.input_dim()) {
        throw DimensionError("run_experiment: input signal dimension mismatch");
    }

    const SamplingSchedule schedule = scenario.schedule.realize(scenario.steps);

    std::vector<VectorXd> inputs;
    inputs.reserve(static_cast<std::size_t>(scenario.steps) + 1);
    for (Time t = 0; t <= scenario.steps; ++t) inputs.push_back(scenario.input.at(t));
    const std::vector<VectorXd> disturbances =
        draw_disturbances(scenario.disturbance_bounds, scenario.steps, scenario.seed);

    ExperimentResult result;
    result.seed = scenario.seed;
    result.scenario = scenario;
    result.truth = simulate(sys, scenario.x0, inputs, disturbances, scenario.steps);
    apply_schedule(result.truth, schedule);

    EstimatorState estimator(sys, scenario.estimator, scenario.x0_estimate);
    for (Time t = 1; t <= scenario.steps; ++t) {
        std::vector<Measurement> revealed;
        if (result.truth.available[static_cast<std::size_t>(t - 1)]) {
            revealed.push_back({t - 1, result.truth.outputs[static_cast<std::size_t>(t - 1)]});
        }
        const auto info = estimator.step(inputs[static_cast<std::size_t>(t - 1)], revealed);
        result.step_records.push_back({info.solved, info.iterations, info.converged});
    }

    result.estimates = estimator.estimate_history();
    result.error_norms.reserve(result.estimates.size());
    for (std::size_t k = 0; k < result.estimates.size(); ++k) {
        result.error_norms.push_back((result.truth.states[k] - result.estimates[k]).norm());
    }
    result.rmse = rmse(result);
    return result;
}

double rmse(const ExperimentResult& result) {
    if (result.estimates.empty() || result.estimates.size() != result.truth.states.size()) {
        throw DimensionError("rmse: result lacks matching truth/estimate trajectories");
    }
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < result.estimates.size(); ++k) {
        sum_sq += (result.truth.states[k] - result.estimates[k]).squaredNorm();
    }
    return std::sqrt(sum_sq / static_cast<double>(result.estimates.size()));
}

namespace {

unsigned sweep_thread_count(std::size_t tasks) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    if (const char* env = std::getenv("HORIZON_EST_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) workers = static_cast<unsigned>(parsed);
    }
    return static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(tasks, 1)));
}

} // namespace

std::vector<SweepRow> sweep_schedules(const Scenario& base,
                                      const std::vector<ScheduleSpec>& schedules,
                                      const std::vector<std::uint64_t>& seeds) {
    if (schedules.size() < 1) throw ConfigError("sweep_schedules: need at least one schedule");
    if (seeds.empty()) throw ConfigError("sweep_schedules: need at least one seed");

    struct Task {
        std::size_t schedule_index;
        std::size_t replicate_index;
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < schedules.size(); ++i) {
        for (std::size_t r = 0; r < seeds.size(); ++r) tasks.push_back({i, r});
    }
    std::vector<double> rmse_table(tasks.size(), 0.0);
    std::exception_ptr failure;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size() || failed.load()) return;
            try {
                Scenario scn = base;
                scn.schedule = schedules[tasks[k].schedule_index];
                scn.seed = seeds[tasks[k].replicate_index] ^
                           static_cast<std::uint64_t>(tasks[k].schedule_index);
                rmse_table[k] = run_experiment(scn).rmse;
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };

    const unsigned workers = sweep_thread_count(tasks.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned k = 0; k < workers; ++k) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<SweepRow> rows;
    rows.reserve(schedules.size());
    const auto replicates = static_cast<double>(seeds.size());
    for (std::size_t i = 0; i < schedules.size(); ++i) {
        double mean = 0.0;
        for (std::size_t r = 0; r < seeds.size(); ++r) {
            mean += rmse_table[i * seeds.size() + r];
        }
        mean /= replicates;
        double var = 0.0;
        for (std::size_t r = 0; r < seeds.size(); ++r) {
            const double d = rmse_table[i * seeds.size() + r] - mean;
            var += d * d;
        }
        var = seeds.size() > 1 ? var / (replicates - 1.0) : 0.0;
        rows.push_back({schedules[i].display_label(), schedules[i].average_gap(), mean,
                        std::sqrt(var)});
    }
    return rows;
}

} // namespace hest
