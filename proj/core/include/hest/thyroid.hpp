#pragma once

#include <utility>
#include <vector>

#include "hest/schedule.hpp"
#include "hest/system.hpp"

namespace hest {

/// Rate constants of the two-state TSH/FT4 hormone model, Euler-discretized
/// with step `step_hours`. The medication term enters through the (scalar)
/// input channel; the disturbance vector is (w1, w2, w3) with w3 the output
/// noise.
struct ThyroidParams {
    double p1 = 0.0; // TSH production gain
    double p2 = 0.0; // FT4 production gain (low values model hypothyroidism)
    double s1 = 0.0; // FT4 saturation constant in the TSH equation
    double s2 = 0.0; // TSH saturation constant in the FT4 equation
    double d1 = 0.0; // TSH clearance rate, 1/h
    double d2 = 0.0; // FT4 clearance rate, 1/h
    double setpoint = 0.0;   // euthyroid FT4 target (U)
    double step_hours = 2.0; // discretization step (tau)
};

/// Two-state plant
///
///   tsh+ = p1*tau*(U - ft4)/(s1 + ft4) + p1*tau + (1 - d1*tau)*tsh + w1
///   ft4+ = tau*p2*tsh/(s2 + tsh) + (1 - d2*tau)*ft4 + G*tau + w2
///   y    = tsh + w3
///
/// with analytic Jacobians. Throws ModelDomainError when a saturation
/// denominator s1+ft4 or s2+tsh becomes non-positive.
NonlinearSystem build_thyroid(const ThyroidParams& params);

/// Piecewise-constant medication timeline in simulation steps: zero dose
/// until start_day, `dose` afterwards, with the dose dropped again for the
/// single day skip_day. Expressed as (step, value) breakpoints.
std::vector<std::pair<Time, double>> medication_schedule(Time start_day, Time skip_day,
                                                         double dose, Time steps_per_day = 12);

} // namespace hest
