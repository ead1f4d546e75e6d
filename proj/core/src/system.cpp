#include "hest/system.hpp"

#include <cmath>
#include <limits>

namespace hest {

namespace {

void check_dim(const VectorXd& v, Eigen::Index expected, const char* what) {
    if (v.size() != expected) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(v.size()));
    }
}

} // namespace

Box Box::unbounded(Eigen::Index dim) {
    const double inf = std::numeric_limits<double>::infinity();
    Box b;
    b.lo = VectorXd::Constant(dim, -inf);
    b.hi = VectorXd::Constant(dim, inf);
    return b;
}

bool Box::contains(const VectorXd& v, double tol) const {
    check_dim(v, lo.size(), "Box::contains");
    return ((v.array() >= lo.array() - tol) && (v.array() <= hi.array() + tol)).all();
}

VectorXd Box::project(const VectorXd& v) const {
    check_dim(v, lo.size(), "Box::project");
    return v.cwiseMax(lo).cwiseMin(hi);
}

bool Box::is_unbounded() const {
    return !lo.array().isFinite().any() && !hi.array().isFinite().any();
}

NonlinearSystem::NonlinearSystem(Eigen::Index state_dim, Eigen::Index input_dim,
                                 Eigen::Index disturbance_dim, Eigen::Index output_dim,
                                 Map transition, Map output)
    : n_(state_dim),
      m_(input_dim),
      q_(disturbance_dim),
      p_(output_dim),
      f_(std::move(transition)),
      h_(std::move(output)),
      state_box_(Box::unbounded(state_dim)),
      disturbance_box_(Box::unbounded(disturbance_dim)),
      output_box_(Box::unbounded(output_dim)) {
    if (n_ < 1 || m_ < 0 || q_ < 0 || p_ < 1) {
        throw DimensionError("NonlinearSystem: dimensions must satisfy n>=1, m>=0, q>=0, p>=1");
    }
    if (!f_ || !h_) {
        throw DimensionError("NonlinearSystem: transition and output maps are required");
    }
}

VectorXd NonlinearSystem::transition(const VectorXd& x, const VectorXd& u,
                                     const VectorXd& w) const {
    check_dim(x, n_, "transition state");
    check_dim(u, m_, "transition input");
    check_dim(w, q_, "transition disturbance");
    VectorXd next = f_(x, u, w);
    check_dim(next, n_, "transition result");
    return next;
}

VectorXd NonlinearSystem::output(const VectorXd& x, const VectorXd& u, const VectorXd& w) const {
    check_dim(x, n_, "output state");
    check_dim(u, m_, "output input");
    check_dim(w, q_, "output disturbance");
    VectorXd y = h_(x, u, w);
    check_dim(y, p_, "output result");
    return y;
}

MapJacobians NonlinearSystem::transition_jacobians(const VectorXd& x, const VectorXd& u,
                                                   const VectorXd& w) const {
    if (f_jac_) {
        MapJacobians jac = f_jac_(x, u, w);
        if (jac.wrt_state.rows() != n_ || jac.wrt_state.cols() != n_ ||
            jac.wrt_disturbance.rows() != n_ || jac.wrt_disturbance.cols() != q_) {
            throw DimensionError("transition_jacobians: analytic Jacobian has wrong shape");
        }
        return jac;
    }
    MapJacobians jac;
    jac.wrt_state = detail::finite_difference_jacobian(
        [&](const VectorXd& xs) { return f_(xs, u, w); }, x, n_);
    jac.wrt_disturbance = detail::finite_difference_jacobian(
        [&](const VectorXd& ws) { return f_(x, u, ws); }, w, n_);
    return jac;
}

MapJacobians NonlinearSystem::output_jacobians(const VectorXd& x, const VectorXd& u,
                                               const VectorXd& w) const {
    if (h_jac_) {
        MapJacobians jac = h_jac_(x, u, w);
        if (jac.wrt_state.rows() != p_ || jac.wrt_state.cols() != n_ ||
            jac.wrt_disturbance.rows() != p_ || jac.wrt_disturbance.cols() != q_) {
            throw DimensionError("output_jacobians: analytic Jacobian has wrong shape");
        }
        return jac;
    }
    MapJacobians jac;
    jac.wrt_state = detail::finite_difference_jacobian(
        [&](const VectorXd& xs) { return h_(xs, u, w); }, x, p_);
    jac.wrt_disturbance = detail::finite_difference_jacobian(
        [&](const VectorXd& ws) { return h_(x, u, ws); }, w, p_);
    return jac;
}

namespace {
Box validated_box(Box box, Eigen::Index dim, const char* what) {
    if (box.lo.size() != dim || box.hi.size() != dim) {
        throw DimensionError(std::string(what) + ": box dimension mismatch");
    }
    if ((box.lo.array() > box.hi.array()).any()) {
        throw DimensionError(std::string(what) + ": lower bound exceeds upper bound");
    }
    return box;
}
} // namespace

NonlinearSystem& NonlinearSystem::with_state_box(Box box) {
    state_box_ = validated_box(std::move(box), n_, "state box");
    return *this;
}

NonlinearSystem& NonlinearSystem::with_disturbance_box(Box box) {
    disturbance_box_ = validated_box(std::move(box), q_, "disturbance box");
    return *this;
}

NonlinearSystem& NonlinearSystem::with_output_box(Box box) {
    output_box_ = validated_box(std::move(box), p_, "output box");
    return *this;
}

NonlinearSystem& NonlinearSystem::with_transition_jacobians(JacobianMap jac) {
    f_jac_ = std::move(jac);
    return *this;
}

NonlinearSystem& NonlinearSystem::with_output_jacobians(JacobianMap jac) {
    h_jac_ = std::move(jac);
    return *this;
}

LinearSystem::LinearSystem(MatrixXd A_, MatrixXd B_, MatrixXd C_, MatrixXd D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n) throw DimensionError("LinearSystem: A must be square");
    if (B.rows() != n) throw DimensionError("LinearSystem: B must have n rows");
    if (C.cols() != n) throw DimensionError("LinearSystem: C must have n columns");
    if (D.rows() != C.rows() || D.cols() != B.cols()) {
        throw DimensionError("LinearSystem: D must be p x m");
    }
}

LinearSystem LinearSystem::autonomous(MatrixXd A_, MatrixXd C_) {
    const Eigen::Index n = A_.rows();
    const Eigen::Index p = C_.rows();
    return LinearSystem(std::move(A_), MatrixXd::Zero(n, 0), std::move(C_), MatrixXd::Zero(p, 0));
}

NonlinearSystem linear_as_nonlinear(const LinearSystem& sys) {
    const Eigen::Index n = sys.state_dim();
    const Eigen::Index m = sys.input_dim();
    const Eigen::Index p = sys.output_dim();
    const MatrixXd A = sys.A;
    const MatrixXd B = sys.B;
    const MatrixXd C = sys.C;
    const MatrixXd D = sys.D;

    NonlinearSystem out(
        n, m, /*disturbance_dim=*/n, p,
        [A, B](const VectorXd& x, const VectorXd& u, const VectorXd& w) -> VectorXd {
            return A * x + B * u + w;
        },
        [C, D](const VectorXd& x, const VectorXd& u, const VectorXd&) -> VectorXd {
            return C * x + D * u;
        });
    out.with_transition_jacobians(
        [A, n](const VectorXd&, const VectorXd&, const VectorXd&) -> MapJacobians {
            return {A, MatrixXd::Identity(n, n)};
        });
    out.with_output_jacobians(
        [C, n, p](const VectorXd&, const VectorXd&, const VectorXd&) -> MapJacobians {
            return {C, MatrixXd::Zero(p, n)};
        });
    return out;
}

namespace detail {

MatrixXd finite_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& g,
                                    const VectorXd& v, Eigen::Index out_dim) {
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    MatrixXd jac(out_dim, v.size());
    VectorXd probe = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double step = sqrt_eps * (1.0 + std::abs(v[i]));
        probe[i] = v[i] + step;
        const VectorXd plus = g(probe);
        probe[i] = v[i] - step;
        const VectorXd minus = g(probe);
        probe[i] = v[i];
        jac.col(i) = (plus - minus) / (2.0 * step);
    }
    return jac;
}

} // namespace detail

} // namespace hest
