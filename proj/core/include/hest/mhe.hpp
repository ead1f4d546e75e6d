#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hest/schedule.hpp"
#include "hest/system.hpp"

namespace hest {

enum class ConstraintMode {
    Unconstrained,
    /// Decision variables are clamped onto the state/disturbance boxes after
    /// every accepted step and the rollout projects states onto the state
    /// box. Inexact for active constraints; adequate for feasibility, not
    /// for KKT-accurate constrained optima.
    Projected,
};

struct SolverSettings {
    int max_iterations = 100;
    /// Sup-norm of the cost gradient below which the solve is converged.
    double gradient_tolerance = 1e-9;
    /// Relative step size below which iteration stalls.
    double step_tolerance = 1e-14;
    double initial_damping = 1e-3;
    /// Damping is multiplied by this on rejected steps, divided on accepted.
    double damping_scale = 10.0;
};

/// Weights and knobs of the windowed estimation problem. The quadratic
/// weights play the role of the detectability certificate's matrices; the
/// discount shrinks the influence of older residuals.
struct EstimatorConfig {
    Time horizon = 1;            // base window length M >= 1
    double discount = 0.5;       // eta in [0, 1)
    MatrixXd prior_weight;       // P2, n x n, symmetric positive definite
    MatrixXd disturbance_weight; // Q, q x q, symmetric positive definite
    MatrixXd output_weight;      // R, p x p, symmetric positive semidefinite
    SolverSettings solver;
    ConstraintMode constraint_mode = ConstraintMode::Unconstrained;
};

/// Throws ConfigError unless the weights conform to the system dimensions,
/// are symmetric to 1e-12 relative, P2 and Q pass a Cholesky factorization,
/// R is positive semidefinite, and the discount lies in [0, 1).
void validate(const EstimatorConfig& config, const NonlinearSystem& system);

/// Exponential incremental IOSS certificate (P1, P2, Q, R, eta). Supplied by
/// the user for nonlinear systems; used to size horizons and evaluate error
/// envelopes.
struct IossCertificate {
    MatrixXd P1;
    MatrixXd P2;
    MatrixXd Q;
    MatrixXd R;
    double eta = 0.0;
};

/// Throws ConfigError unless P1, P2 are SPD, Q, R are symmetric PSD and
/// eta is in [0, 1).
void validate(const IossCertificate& cert);

struct Measurement {
    Time time;
    VectorXd value;
};

/// One windowed estimation instance over [window_start, current_time].
/// Decision variables are the window's first state and the disturbance
/// sequence; states are recovered by rollout.
struct MheProblem {
    const NonlinearSystem* system = nullptr;
    const EstimatorConfig* config = nullptr;
    Time current_time = 0;
    Time window_start = 0;
    std::vector<VectorXd> inputs;          // u over [window_start, current_time-1]
    std::vector<Measurement> measurements; // sorted, times within the window
    VectorXd prior;                        // estimate produced at window_start

    Time window_length() const { return current_time - window_start; }
};

/// Validates dimensions, measurement placement, and ordering.
MheProblem make_problem(const NonlinearSystem& system, const EstimatorConfig& config,
                        Time current_time, Time window_start, std::vector<VectorXd> inputs,
                        std::vector<Measurement> measurements, VectorXd prior);

struct MheSolution {
    std::vector<VectorXd> states;       // window_start .. current_time
    std::vector<VectorXd> disturbances; // window_start .. current_time-1
    std::vector<VectorXd> outputs;      // window_start .. current_time-1
    double cost = 0.0;
    int iterations = 0;
    double first_order_norm = 0.0;
    bool converged = false;
    Time solved_at = 0;
    Time window_start = 0;

    /// Terminal state, i.e. the point estimate for solved_at.
    const VectorXd& estimate() const { return states.back(); }
};

/// Discounted quadratic objective: prior deviation (weight 2*eta^M_t under
/// P2), disturbance energy (2*eta^(t-j-1) under Q) and output mismatch at
/// measured steps (eta^(t-j-1) under R), with outputs obtained by rollout.
double cost(const MheProblem& problem, const VectorXd& x_start, const std::vector<VectorXd>& w);

struct ResidualSystem {
    VectorXd residuals; // squared norm equals cost()
    MatrixXd jacobian;  // w.r.t. z = (x_start, w_0, ..., w_{M-1})
};

/// Cholesky-weighted least-squares form of the objective, with the Jacobian
/// obtained by forward sensitivity propagation through the rollout.
ResidualSystem assemble_residuals(const MheProblem& problem, const VectorXd& x_start,
                                  const std::vector<VectorXd>& w);

struct WarmStart {
    VectorXd x_start;
    std::vector<VectorXd> disturbances;
};

/// Levenberg-Marquardt over (x_start, w) in single-shooting form. Starts
/// from `init` when given, otherwise from (prior, 0). Never returns a point
/// worse than the initial one; `converged` reflects the first-order
/// criterion only. Throws SolverError when the initial rollout is
/// non-finite.
MheSolution solve(const MheProblem& problem, std::optional<WarmStart> init = std::nullopt);

/// Nominal one-step prediction f(x, u, 0).
VectorXd open_loop_predict(const VectorXd& x_prev, const VectorXd& u_prev,
                           const NonlinearSystem& system);

/// Maximum generalized eigenvalue of the pencil (P2, P1), both SPD.
double max_generalized_eigenvalue(const MatrixXd& P2, const MatrixXd& P1);

/// Smallest M >= max(1, max_gap) with 4*lmax(P2,P1)^2 * eta^M < 1.
Time min_horizon(const IossCertificate& cert, Time max_gap);

/// Value of the contraction test 4*lmax(P2,P1)^2 * eta^M.
double horizon_contraction(const IossCertificate& cert, Time horizon);

/// Closed-form error envelope: with rho = (4*lmax(P2,P1)^2*eta^M)^(1/M),
/// returns
///   2*sqrt(lmax(P2,P1)*lmax(P2)/lmin(P1)) * sqrt(rho)^t * initial_error_norm
/// + 2*sqrt(lmax(P2,P1)*lmax(Q)/lmin(P1))
///     * sum_j sqrt(rho)^(t-j-1) * disturbance_norms[j].
/// Requires the contraction value at M to be < 1.
double error_bound(const IossCertificate& cert, Time horizon, double initial_error_norm,
                   std::span<const double> disturbance_norms, Time t);

} // namespace hest
