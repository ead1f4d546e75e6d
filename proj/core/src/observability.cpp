#include "hest/observability.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hest/rng.hpp"

namespace hest {

SampleTimes::SampleTimes(std::vector<Time> v) : values(std::move(v)) {
    if (values.empty()) throw ConfigError("SampleTimes: need at least one instant");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] < 0) throw ConfigError("SampleTimes: instants must be >= 0");
        if (k > 0 && values[k] <= values[k - 1]) {
            throw ConfigError("SampleTimes: instants must be strictly increasing");
        }
    }
}

MatrixXd matrix_power(const MatrixXd& A, Time exponent) {
    if (A.rows() != A.cols()) throw DimensionError("matrix_power: matrix must be square");
    if (exponent < 0) throw ConfigError("matrix_power: exponent must be >= 0");
    MatrixXd result = MatrixXd::Identity(A.rows(), A.cols());
    MatrixXd base = A;
    Time e = exponent;
    while (e > 0) {
        if (e & 1) result = result * base;
        e >>= 1;
        if (e > 0) base = base * base;
    }
    return result;
}

MatrixXd sampled_obs_matrix(const MatrixXd& A, const MatrixXd& C, const SampleTimes& taus) {
    if (A.rows() != A.cols()) throw DimensionError("sampled_obs_matrix: A must be square");
    if (C.cols() != A.rows()) throw DimensionError("sampled_obs_matrix: C must have n columns");
    const Eigen::Index n = A.rows();
    const Eigen::Index p = C.rows();
    MatrixXd stack(p * static_cast<Eigen::Index>(taus.count()), n);
    for (std::size_t i = 0; i < taus.count(); ++i) {
        stack.middleRows(p * static_cast<Eigen::Index>(i), p) =
            C * matrix_power(A, taus.values[i]);
    }
    return stack;
}

Eigen::Index numerical_rank(const MatrixXd& M, double rank_tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const auto& sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    const double threshold = rank_tol * static_cast<double>(std::max(M.rows(), M.cols())) *
                             std::max(sigma_max, 1.0) * std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > threshold) ++rank;
    }
    return rank;
}

bool is_sample_observable(const MatrixXd& A, const MatrixXd& C, const SampleTimes& taus,
                          double rank_tol) {
    return numerical_rank(sampled_obs_matrix(A, C, taus), rank_tol) == A.rows();
}

bool rolling_window_check(const MatrixXd& A, const MatrixXd& C, const GapSequence& gaps, Time T,
                          double rank_tol) {
    if (A.rows() != A.cols()) throw DimensionError("rolling_window_check: A must be square");
    if (C.cols() != A.rows()) throw DimensionError("rolling_window_check: C must have n columns");
    if (T < gaps.max_gap()) {
        throw ConfigError("rolling_window_check: T must be >= the maximum gap, otherwise a "
                          "window may contain no samples");
    }
    const Eigen::Index n = A.rows();
    const Time period = gaps.period();

    // Enough of the family member K_1 to cover the last checked window.
    const Time last_needed = T + period;
    std::vector<Time> k1;
    {
        Time t = 0;
        for (Time j = 1; t < last_needed; ++j) {
            t += gaps.gap(j);
            k1.push_back(t);
        }
    }

    // Window contents relative to the window start repeat with the pattern
    // period, so positions t in (T, T+period] decide all t > T.
    for (Time t = T + 1; t <= T + period; ++t) {
        const Time lo = t - T - 1;
        std::vector<Time> rel;
        for (Time j : k1) {
            if (j >= lo && j <= t - 1) rel.push_back(j - lo);
        }
        if (rel.empty()) return false;
        if (numerical_rank(sampled_obs_matrix(A, C, SampleTimes(rel)), rank_tol) != n) {
            return false;
        }
    }
    return true;
}

namespace {

VectorXd draw_in_box(const Box& box, CounterRng& rng) {
    VectorXd v(box.dim());
    for (Eigen::Index i = 0; i < box.dim(); ++i) {
        double lo = box.lo[i];
        double hi = box.hi[i];
        if (!std::isfinite(lo)) lo = -1.0;
        if (!std::isfinite(hi)) hi = 1.0;
        v[i] = lo + (hi - lo) * rng.next_unit();
    }
    return v;
}

} // namespace

std::optional<DominanceCounterexample> falsify_output_dominance(
    const NonlinearSystem& sys, const GapSequence& gaps, Time offset, double a_h, double a_w,
    Time t_star, Time horizon, int trials, std::uint64_t seed) {
    if (a_h <= 0.0 || a_w <= 0.0) throw ConfigError("falsify_output_dominance: a_h, a_w > 0");
    if (t_star < 1 || horizon < t_star) {
        throw ConfigError("falsify_output_dominance: need 1 <= t_star <= horizon");
    }

    std::vector<Time> samples = sample_times(gaps, offset, horizon);
    samples.erase(std::remove_if(samples.begin(), samples.end(),
                                 [&](Time t) { return t > horizon; }),
                  samples.end());

    const VectorXd u = VectorXd::Zero(sys.input_dim());
    for (int trial = 0; trial < trials; ++trial) {
        CounterRng rng(CounterRng::at(seed, static_cast<std::uint64_t>(trial)));
        const VectorXd x0_a = draw_in_box(sys.state_box(), rng);
        const VectorXd x0_b = draw_in_box(sys.state_box(), rng);
        // One disturbance per time 0..horizon: transitions consume the first
        // `horizon` entries, outputs consume all of them.
        std::vector<VectorXd> w_a, w_b;
        for (Time t = 0; t <= horizon; ++t) {
            w_a.push_back(draw_in_box(sys.disturbance_box(), rng));
            w_b.push_back(draw_in_box(sys.disturbance_box(), rng));
        }

        VectorXd xa = x0_a, xb = x0_b;
        std::vector<double> dy_norm; // ||dy_t|| for t = 0..horizon
        std::vector<double> dw_norm; // ||dw_t|| for t = 0..horizon-1
        dy_norm.push_back((sys.output(xa, u, w_a[0]) - sys.output(xb, u, w_b[0])).norm());
        for (Time t = 0; t < horizon; ++t) {
            const auto k = static_cast<std::size_t>(t);
            dw_norm.push_back((w_a[k] - w_b[k]).norm());
            xa = sys.transition(xa, u, w_a[k]);
            xb = sys.transition(xb, u, w_b[k]);
            dy_norm.push_back((sys.output(xa, u, w_a[k + 1]) - sys.output(xb, u, w_b[k + 1])).norm());
        }

        for (Time t = t_star; t <= horizon; ++t) {
            double sampled_term = -1.0;
            for (Time j : samples) {
                if (j <= t - 1) {
                    sampled_term =
                        std::max(sampled_term, a_h * dy_norm[static_cast<std::size_t>(j)]);
                }
            }
            if (sampled_term < 0.0) continue; // no sampled output yet; nothing to falsify
            double w_term = 0.0;
            for (Time j = 0; j < t; ++j) {
                w_term = std::max(w_term, a_w * dw_norm[static_cast<std::size_t>(j)]);
            }
            const double bound = std::max(sampled_term, w_term);
            const double lhs = dy_norm[static_cast<std::size_t>(t)];
            if (lhs > bound * (1.0 + 1e-9) + 1e-12) {
                DominanceCounterexample ce;
                ce.trial = trial;
                ce.time = t;
                ce.output_gap = lhs;
                ce.bound = bound;
                ce.x0_a = x0_a;
                ce.x0_b = x0_b;
                ce.w_a = w_a;
                ce.w_b = w_b;
                return ce;
            }
        }
    }
    return std::nullopt;
}

} // namespace hest
