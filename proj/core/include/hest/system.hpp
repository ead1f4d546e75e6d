#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "hest/errors.hpp"

namespace hest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-coordinate box, lower/upper bounds may be +-infinity.
struct Box {
    VectorXd lo;
    VectorXd hi;

    static Box unbounded(Eigen::Index dim);

    Eigen::Index dim() const { return lo.size(); }
    bool contains(const VectorXd& v, double tol = 0.0) const;
    /// Coordinatewise clamp of v into [lo, hi].
    VectorXd project(const VectorXd& v) const;
    /// True when every coordinate is (-inf, +inf).
    bool is_unbounded() const;
};

/// Jacobians of a map (x, u, w) -> vector with respect to x and w.
struct MapJacobians {
    MatrixXd wrt_state;       // d/dx
    MatrixXd wrt_disturbance; // d/dw
};

/// Discrete-time plant
///
///     x[t+1] = f(x[t], u[t], w[t])
///     y[t]   = h(x[t], u[t], w[t])
///
/// with state dimension n, input dimension m, disturbance dimension q and
/// output dimension p. The disturbance vector carries both process and
/// measurement noise channels. State/disturbance/output constraint sets are
/// per-coordinate boxes; inputs are unconstrained.
///
/// Objects of this type are immutable after construction and may be shared
/// freely across threads.
class NonlinearSystem {
public:
    using Map = std::function<VectorXd(const VectorXd& x, const VectorXd& u, const VectorXd& w)>;
    using JacobianMap =
        std::function<MapJacobians(const VectorXd& x, const VectorXd& u, const VectorXd& w)>;

    NonlinearSystem(Eigen::Index state_dim, Eigen::Index input_dim, Eigen::Index disturbance_dim,
                    Eigen::Index output_dim, Map transition, Map output);

    Eigen::Index state_dim() const { return n_; }
    Eigen::Index input_dim() const { return m_; }
    Eigen::Index disturbance_dim() const { return q_; }
    Eigen::Index output_dim() const { return p_; }

    /// Evaluates f; validates argument and result dimensions.
    VectorXd transition(const VectorXd& x, const VectorXd& u, const VectorXd& w) const;
    /// Evaluates h; validates argument and result dimensions.
    VectorXd output(const VectorXd& x, const VectorXd& u, const VectorXd& w) const;

    /// d f / d(x, w). Analytic when provided, central finite differences
    /// with step sqrt(eps)*(1+|z_i|) otherwise.
    MapJacobians transition_jacobians(const VectorXd& x, const VectorXd& u,
                                      const VectorXd& w) const;
    /// d h / d(x, w), same convention as transition_jacobians.
    MapJacobians output_jacobians(const VectorXd& x, const VectorXd& u, const VectorXd& w) const;

    const Box& state_box() const { return state_box_; }
    const Box& disturbance_box() const { return disturbance_box_; }
    const Box& output_box() const { return output_box_; }

    NonlinearSystem& with_state_box(Box box);
    NonlinearSystem& with_disturbance_box(Box box);
    NonlinearSystem& with_output_box(Box box);
    NonlinearSystem& with_transition_jacobians(JacobianMap jac);
    NonlinearSystem& with_output_jacobians(JacobianMap jac);

private:
    Eigen::Index n_, m_, q_, p_;
    Map f_;
    Map h_;
    JacobianMap f_jac_; // may be empty
    JacobianMap h_jac_; // may be empty
    Box state_box_;
    Box disturbance_box_;
    Box output_box_;
};

/// Linear time-invariant plant
///
///     x[t+1] = A x[t] + B u[t] + w[t]
///     y[t]   = C x[t] + D u[t]
///
/// The disturbance acts additively on the state (q = n) and the output
/// carries no separate noise channel.
struct LinearSystem {
    MatrixXd A;
    MatrixXd B;
    MatrixXd C;
    MatrixXd D;

    LinearSystem(MatrixXd A_, MatrixXd B_, MatrixXd C_, MatrixXd D_);

    /// Convenience constructor for autonomous systems (no input, B and D
    /// become n x 0 and p x 0).
    static LinearSystem autonomous(MatrixXd A_, MatrixXd C_);

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index input_dim() const { return B.cols(); }
    Eigen::Index output_dim() const { return C.rows(); }
};

/// Wraps a LinearSystem in the general plant interface with exact
/// (constant) Jacobians.
NonlinearSystem linear_as_nonlinear(const LinearSystem& sys);

namespace detail {
/// Central finite differences of g around v, step sqrt(eps)*(1+|v_i|).
MatrixXd finite_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& g,
                                    const VectorXd& v, Eigen::Index out_dim);
} // namespace detail

} // namespace hest
