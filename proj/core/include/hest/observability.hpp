#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hest/schedule.hpp"
#include "hest/system.hpp"

namespace hest {

/// Strictly increasing, nonnegative sample instants.
struct SampleTimes {
    std::vector<Time> values;

    explicit SampleTimes(std::vector<Time> v);
    std::size_t count() const { return values.size(); }
};

/// Stack of C*A^tau over the sample instants, powers computed by repeated
/// squaring.
MatrixXd sampled_obs_matrix(const MatrixXd& A, const MatrixXd& C, const SampleTimes& taus);

/// Matrix power by repeated squaring; exponent >= 0.
MatrixXd matrix_power(const MatrixXd& A, Time exponent);

/// Numerical rank: number of singular values exceeding
/// rank_tol * max(rows, cols) * max(sigma_max, 1) * eps.
Eigen::Index numerical_rank(const MatrixXd& M, double rank_tol = 1e4);

/// True iff the sampled observability stack has full column rank.
bool is_sample_observable(const MatrixXd& A, const MatrixXd& C, const SampleTimes& taus,
                          double rank_tol = 1e4);

/// Checks that every window (t-T-1, t-1] of the family member K_1 yields a
/// full-column-rank observability stack, with exponents taken relative to
/// the window start. Window contents repeat with the pattern period, so one
/// period of window positions is checked. Requires T >= max gap so every
/// window contains a sample.
bool rolling_window_check(const MatrixXd& A, const MatrixXd& C, const GapSequence& gaps, Time T,
                          double rank_tol = 1e4);

/// One falsifying trajectory pair for the output-growth inequality
///   ||dy_t|| <= max{ a_h * max sampled ||dy_j||, a_w * max ||dw_j|| }.
struct DominanceCounterexample {
    int trial = 0;
    Time time = 0;
    double output_gap = 0.0; // ||dy_t||
    double bound = 0.0;
    VectorXd x0_a, x0_b;
    std::vector<VectorXd> w_a, w_b;
};

/// Randomized falsification of the output-growth inequality along the
/// sampling family member with the given offset. Initial conditions are
/// drawn from the state box (clamped to [-1, 1] per unbounded coordinate)
/// and disturbances from the disturbance box. Times before the first sample
/// instant are skipped: the sampled-output term is empty there and the
/// inequality carries no information. Returns the first violation found;
/// absence of one is evidence, not proof.
std::optional<DominanceCounterexample> falsify_output_dominance(
    const NonlinearSystem& sys, const GapSequence& gaps, Time offset, double a_h, double a_w,
    Time t_star, Time horizon, int trials, std::uint64_t seed);

} // namespace hest
