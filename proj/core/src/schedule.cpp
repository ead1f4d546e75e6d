#include "hest/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace hest {

GapSequence::GapSequence(std::vector<Time> pattern) : pattern_(std::move(pattern)) {
    if (pattern_.empty()) {
        throw ConfigError("GapSequence: pattern must be nonempty");
    }
    for (Time d : pattern_) {
        if (d < 1) {
            throw ConfigError("GapSequence: every gap must be >= 1, got " + std::to_string(d));
        }
    }
    max_gap_ = *std::max_element(pattern_.begin(), pattern_.end());
    period_ = std::accumulate(pattern_.begin(), pattern_.end(), Time{0});
}

Time GapSequence::gap(Time i) const {
    if (i < 1) throw ConfigError("GapSequence::gap: index is 1-based");
    return pattern_[static_cast<std::size_t>((i - 1) % static_cast<Time>(pattern_.size()))];
}

std::vector<Time> sample_times(const GapSequence& gaps, Time i, Time count) {
    if (i < 1) throw ConfigError("sample_times: offset must be >= 1");
    if (count < 1) throw ConfigError("sample_times: count must be >= 1");
    std::vector<Time> times;
    times.reserve(static_cast<std::size_t>(count));
    Time t = 0;
    for (Time j = 0; j < count; ++j) {
        t += gaps.gap(i + j);
        times.push_back(t);
    }
    return times;
}

SamplingSchedule SamplingSchedule::from_gaps(const GapSequence& gaps, Time offset, Time last_time) {
    if (offset < 1) throw ConfigError("SamplingSchedule: gap offset must be >= 1");
    SamplingSchedule s;
    s.generated_ = true;
    s.offset_ = offset;
    Time t = 0;
    for (Time j = 0;; ++j) {
        t += gaps.gap(offset + j);
        if (t > last_time) break;
        s.times_.push_back(t);
    }
    return s;
}

SamplingSchedule SamplingSchedule::from_times(std::vector<Time> times) {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < 0) throw ConfigError("SamplingSchedule: times must be >= 0");
        if (k > 0 && times[k] <= times[k - 1]) {
            throw ConfigError("SamplingSchedule: times must be strictly increasing");
        }
    }
    SamplingSchedule s;
    s.times_ = std::move(times);
    return s;
}

bool SamplingSchedule::contains(Time t) const {
    return std::binary_search(times_.begin(), times_.end(), t);
}

std::optional<Time> SamplingSchedule::last_before(Time t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return std::nullopt;
    return *std::prev(it);
}

Time steps_since_measurement(Time t, const SamplingSchedule& schedule) {
    if (t < 0) throw ConfigError("steps_since_measurement: t must be >= 0");
    if (t == 0) return 0;
    const Time last = schedule.last_before(t).value_or(0);
    return t - 1 - last;
}

Time horizon_length(Time t, Time base_horizon, const SamplingSchedule& schedule) {
    if (base_horizon < 1) throw ConfigError("horizon_length: base horizon must be >= 1");
    return std::min(t, base_horizon + steps_since_measurement(t, schedule));
}

} // namespace hest
