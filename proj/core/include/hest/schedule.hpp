#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hest/errors.hpp"

namespace hest {

using Time = std::int64_t;

/// Finite gap pattern, cyclically repeated to form an infinite sequence of
/// inter-measurement gaps. Gaps are required to be >= 1 so that generated
/// measurement times are strictly increasing.
class GapSequence {
public:
    explicit GapSequence(std::vector<Time> pattern);

    const std::vector<Time>& pattern() const { return pattern_; }
    Time max_gap() const { return max_gap_; }
    /// Sum of one full pattern period; window contents of rolling checks
    /// repeat with this period.
    Time period() const { return period_; }

    /// i-th gap of the infinite cyclic sequence, 1-indexed.
    Time gap(Time i) const;

private:
    std::vector<Time> pattern_;
    Time max_gap_;
    Time period_;
};

/// First `count` measurement times of the family member starting at gap
/// offset `i` (1-indexed): t_1 = d_i, t_j = t_[j-1] + d_[i+j-1].
std::vector<Time> sample_times(const GapSequence& gaps, Time i, Time count);

/// Realized measurement times over a finite simulation horizon, either
/// generated from a gap pattern or supplied explicitly.
class SamplingSchedule {
public:
    /// All generated times <= last_time.
    static SamplingSchedule from_gaps(const GapSequence& gaps, Time offset, Time last_time);
    /// Explicit user-given times; must be strictly increasing and >= 0.
    static SamplingSchedule from_times(std::vector<Time> times);

    const std::vector<Time>& times() const { return times_; }
    bool contains(Time t) const;
    /// Largest measurement time strictly before t, if any.
    std::optional<Time> last_before(Time t) const;

    bool generated() const { return generated_; }
    Time offset() const { return offset_; }

private:
    SamplingSchedule() = default;
    std::vector<Time> times_;
    bool generated_ = false;
    Time offset_ = 0;
};

/// Steps elapsed since the most recent measurement strictly before t:
/// t - 1 - max({0} u {j in schedule : j < t}); 0 at t = 0.
Time steps_since_measurement(Time t, const SamplingSchedule& schedule);

/// Time-varying estimation window length min{t, M + delta_t}.
Time horizon_length(Time t, Time base_horizon, const SamplingSchedule& schedule);

} // namespace hest
