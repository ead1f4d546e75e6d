#include "hest/mhe.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hest {

namespace {

bool is_symmetric(const MatrixXd& P, double rel_tol = 1e-12) {
    if (P.rows() != P.cols()) return false;
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    return (P - P.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_spd(const MatrixXd& P) {
    if (!is_symmetric(P)) return false;
    Eigen::LLT<MatrixXd> llt(P);
    return llt.info() == Eigen::Success;
}

bool is_psd(const MatrixXd& P) {
    if (!is_symmetric(P)) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

/// Factor S with ||S v||^2 = v' P v: Cholesky transpose for SPD P,
/// eigenvalue square root for PSD-singular P.
MatrixXd sqrt_weight(const MatrixXd& P) {
    Eigen::LLT<MatrixXd> llt(P);
    if (llt.info() == Eigen::Success) {
        return MatrixXd(llt.matrixL()).transpose();
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(P);
    if (es.info() != Eigen::Success) {
        throw ConfigError("sqrt_weight: eigen decomposition failed");
    }
    const VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
    return clamped.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

struct Rollout {
    std::vector<VectorXd> states;  // window_start .. current_time
    std::vector<VectorXd> outputs; // window_start .. current_time-1
};

/// Forward rollout of the window. In projected mode the start state is
/// clamped and every transition result is clamped onto the state box.
Rollout roll_out(const MheProblem& prob, const VectorXd& x_start, const std::vector<VectorXd>& w) {
    const bool projected = prob.config->constraint_mode == ConstraintMode::Projected;
    const auto steps = static_cast<std::size_t>(prob.window_length());
    Rollout r;
    r.states.reserve(steps + 1);
    r.outputs.reserve(steps);
    r.states.push_back(projected ? prob.system->state_box().project(x_start) : x_start);
    for (std::size_t k = 0; k < steps; ++k) {
        r.outputs.push_back(prob.system->output(r.states[k], prob.inputs[k], w[k]));
        VectorXd next = prob.system->transition(r.states[k], prob.inputs[k], w[k]);
        if (projected) next = prob.system->state_box().project(next);
        r.states.push_back(std::move(next));
    }
    return r;
}

void check_problem_inputs(const MheProblem& prob, const VectorXd& x_start,
                          const std::vector<VectorXd>& w) {
    if (x_start.size() != prob.system->state_dim()) {
        throw DimensionError("mhe: start state has wrong dimension");
    }
    if (w.size() != static_cast<std::size_t>(prob.window_length())) {
        throw DimensionError("mhe: disturbance sequence must have window length " +
                             std::to_string(prob.window_length()));
    }
    for (const VectorXd& wj : w) {
        if (wj.size() != prob.system->disturbance_dim()) {
            throw DimensionError("mhe: disturbance vector has wrong dimension");
        }
    }
}

} // namespace

void validate(const EstimatorConfig& config, const NonlinearSystem& system) {
    const Eigen::Index n = system.state_dim();
    const Eigen::Index q = system.disturbance_dim();
    const Eigen::Index p = system.output_dim();
    if (config.horizon < 1) throw ConfigError("EstimatorConfig: horizon must be >= 1");
    if (!(config.discount >= 0.0 && config.discount < 1.0)) {
        throw ConfigError("EstimatorConfig: discount must lie in [0, 1)");
    }
    if (config.prior_weight.rows() != n || config.prior_weight.cols() != n) {
        throw ConfigError("EstimatorConfig: prior weight must be n x n");
    }
    if (config.disturbance_weight.rows() != q || config.disturbance_weight.cols() != q) {
        throw ConfigError("EstimatorConfig: disturbance weight must be q x q");
    }
    if (config.output_weight.rows() != p || config.output_weight.cols() != p) {
        throw ConfigError("EstimatorConfig: output weight must be p x p");
    }
    if (!is_spd(config.prior_weight)) {
        throw ConfigError("EstimatorConfig: prior weight must be symmetric positive definite");
    }
    // Q is required SPD so the least-squares problem stays coercive in w.
    if (!is_spd(config.disturbance_weight)) {
        throw ConfigError(
            "EstimatorConfig: disturbance weight must be symmetric positive definite");
    }
    if (!is_psd(config.output_weight)) {
        throw ConfigError("EstimatorConfig: output weight must be symmetric positive semidefinite");
    }
    if (config.solver.max_iterations < 1 || config.solver.gradient_tolerance <= 0.0 ||
        config.solver.step_tolerance <= 0.0 || config.solver.initial_damping <= 0.0 ||
        config.solver.damping_scale <= 1.0) {
        throw ConfigError("EstimatorConfig: invalid solver settings");
    }
}

void validate(const IossCertificate& cert) {
    if (!is_spd(cert.P1)) throw ConfigError("IossCertificate: P1 must be SPD");
    if (!is_spd(cert.P2)) throw ConfigError("IossCertificate: P2 must be SPD");
    if (cert.P1.rows() != cert.P2.rows()) {
        throw ConfigError("IossCertificate: P1 and P2 must have equal dimensions");
    }
    if (!is_psd(cert.Q)) throw ConfigError("IossCertificate: Q must be symmetric PSD");
    if (!is_psd(cert.R)) throw ConfigError("IossCertificate: R must be symmetric PSD");
    if (!(cert.eta >= 0.0 && cert.eta < 1.0)) {
        throw ConfigError("IossCertificate: eta must lie in [0, 1)");
    }
}

MheProblem make_problem(const NonlinearSystem& system, const EstimatorConfig& config,
                        Time current_time, Time window_start, std::vector<VectorXd> inputs,
                        std::vector<Measurement> measurements, VectorXd prior) {
    validate(config, system);
    if (window_start < 0 || window_start > current_time) {
        throw ConfigError("MheProblem: window must satisfy 0 <= window_start <= current_time");
    }
    MheProblem prob;
    prob.system = &system;
    prob.config = &config;
    prob.current_time = current_time;
    prob.window_start = window_start;
    prob.inputs = std::move(inputs);
    prob.measurements = std::move(measurements);
    prob.prior = std::move(prior);

    if (prob.prior.size() != system.state_dim()) {
        throw DimensionError("MheProblem: prior has wrong dimension");
    }
    if (prob.inputs.size() != static_cast<std::size_t>(prob.window_length())) {
        throw DimensionError("MheProblem: need one input per window step");
    }
    for (const VectorXd& u : prob.inputs) {
        if (u.size() != system.input_dim()) {
            throw DimensionError("MheProblem: input vector has wrong dimension");
        }
    }
    std::sort(prob.measurements.begin(), prob.measurements.end(),
              [](const Measurement& a, const Measurement& b) { return a.time < b.time; });
    for (std::size_t k = 0; k < prob.measurements.size(); ++k) {
        const Measurement& m = prob.measurements[k];
        if (m.time < window_start || m.time >= current_time) {
            throw ConfigError("MheProblem: measurement time outside [window_start, t-1]");
        }
        if (k > 0 && prob.measurements[k - 1].time == m.time) {
            throw ConfigError("MheProblem: duplicate measurement time");
        }
        if (m.value.size() != system.output_dim()) {
            throw DimensionError("MheProblem: measurement has wrong dimension");
        }
    }
    return prob;
}

double cost(const MheProblem& prob, const VectorXd& x_start, const std::vector<VectorXd>& w) {
    check_problem_inputs(prob, x_start, w);
    const double eta = prob.config->discount;
    const Time t = prob.current_time;
    const Time s = prob.window_start;

    const Rollout r = roll_out(prob, x_start, w);
    const VectorXd dx = r.states.front() - prob.prior;
    double value = 2.0 * std::pow(eta, static_cast<double>(prob.window_length())) *
                   dx.dot(prob.config->prior_weight * dx);
    for (Time j = s; j < t; ++j) {
        const VectorXd& wj = w[static_cast<std::size_t>(j - s)];
        value += 2.0 * std::pow(eta, static_cast<double>(t - j - 1)) *
                 wj.dot(prob.config->disturbance_weight * wj);
    }
    for (const Measurement& m : prob.measurements) {
        const VectorXd dy = r.outputs[static_cast<std::size_t>(m.time - s)] - m.value;
        value += std::pow(eta, static_cast<double>(t - m.time - 1)) *
                 dy.dot(prob.config->output_weight * dy);
    }
    return value;
}

namespace {

/// Shared by residual-only and residual+Jacobian paths.
/// Residual layout: prior block, then all disturbance blocks, then output
/// blocks in measurement order.
struct ResidualWorkspace {
    MatrixXd sqrt_prior, sqrt_disturbance, sqrt_output;
    Eigen::Index rows = 0, cols = 0;

    explicit ResidualWorkspace(const MheProblem& prob) {
        sqrt_prior = sqrt_weight(prob.config->prior_weight);
        sqrt_disturbance = sqrt_weight(prob.config->disturbance_weight);
        sqrt_output = sqrt_weight(prob.config->output_weight);
        const Eigen::Index n = prob.system->state_dim();
        const Eigen::Index q = prob.system->disturbance_dim();
        const Eigen::Index p = prob.system->output_dim();
        const auto steps = prob.window_length();
        rows = n + q * steps + p * static_cast<Eigen::Index>(prob.measurements.size());
        cols = n + q * steps;
    }
};

VectorXd residual_vector(const MheProblem& prob, const ResidualWorkspace& ws,
                         const VectorXd& x_start, const std::vector<VectorXd>& w,
                         const Rollout& r) {
    const double eta = prob.config->discount;
    const Time t = prob.current_time;
    const Time s = prob.window_start;
    const Eigen::Index n = prob.system->state_dim();
    const Eigen::Index q = prob.system->disturbance_dim();
    const Eigen::Index p = prob.system->output_dim();

    VectorXd res(ws.rows);
    const double prior_scale =
        std::sqrt(2.0) * std::pow(eta, static_cast<double>(prob.window_length()) / 2.0);
    res.head(n) = prior_scale * (ws.sqrt_prior * (r.states.front() - prob.prior));
    Eigen::Index row = n;
    for (Time j = s; j < t; ++j) {
        const double scale =
            std::sqrt(2.0) * std::pow(eta, static_cast<double>(t - j - 1) / 2.0);
        res.segment(row, q) =
            scale * (ws.sqrt_disturbance * w[static_cast<std::size_t>(j - s)]);
        row += q;
    }
    for (const Measurement& m : prob.measurements) {
        const double scale = std::pow(eta, static_cast<double>(t - m.time - 1) / 2.0);
        res.segment(row, p) =
            scale * (ws.sqrt_output * (r.outputs[static_cast<std::size_t>(m.time - s)] - m.value));
        row += p;
    }
    return res;
}

MatrixXd residual_jacobian(const MheProblem& prob, const ResidualWorkspace& ws,
                           const std::vector<VectorXd>& w, const Rollout& r) {
    const double eta = prob.config->discount;
    const Time t = prob.current_time;
    const Time s = prob.window_start;
    const Eigen::Index n = prob.system->state_dim();
    const Eigen::Index q = prob.system->disturbance_dim();
    const Eigen::Index p = prob.system->output_dim();
    const auto steps = static_cast<std::size_t>(prob.window_length());
    const bool projected = prob.config->constraint_mode == ConstraintMode::Projected;

    MatrixXd jac = MatrixXd::Zero(ws.rows, ws.cols);

    // Sensitivity of the rolled-out state w.r.t. z, propagated forward. The
    // start state enters already clamped (solve projects z), so its
    // sensitivity is the identity.
    MatrixXd state_sens = MatrixXd::Zero(n, ws.cols);
    state_sens.leftCols(n).setIdentity();

    const double prior_scale =
        std::sqrt(2.0) * std::pow(eta, static_cast<double>(prob.window_length()) / 2.0);
    jac.topLeftCorner(n, n) = prior_scale * ws.sqrt_prior;

    // Row offsets of the measurement blocks, keyed by position in
    // prob.measurements.
    const Eigen::Index meas_row0 = n + q * static_cast<Eigen::Index>(steps);

    std::size_t meas_idx = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        const Time j = s + static_cast<Time>(k);
        const Eigen::Index w_col = n + q * static_cast<Eigen::Index>(k);

        const double w_scale =
            std::sqrt(2.0) * std::pow(eta, static_cast<double>(t - j - 1) / 2.0);
        jac.block(n + q * static_cast<Eigen::Index>(k), w_col, q, q) =
            w_scale * ws.sqrt_disturbance;

        if (meas_idx < prob.measurements.size() && prob.measurements[meas_idx].time == j) {
            const MapJacobians hj =
                prob.system->output_jacobians(r.states[k], prob.inputs[k], w[k]);
            const double y_scale = std::pow(eta, static_cast<double>(t - j - 1) / 2.0);
            MatrixXd out_sens = hj.wrt_state * state_sens;
            out_sens.block(0, w_col, p, q) += hj.wrt_disturbance;
            jac.block(meas_row0 + p * static_cast<Eigen::Index>(meas_idx), 0, p, ws.cols) =
                y_scale * (ws.sqrt_output * out_sens);
            ++meas_idx;
        }

        const MapJacobians fj = prob.system->transition_jacobians(r.states[k], prob.inputs[k], w[k]);
        state_sens = fj.wrt_state * state_sens;
        state_sens.block(0, w_col, n, q) += fj.wrt_disturbance;
        if (projected && k + 1 < r.states.size()) {
            const VectorXd raw = prob.system->transition(r.states[k], prob.inputs[k], w[k]);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (raw[i] != r.states[k + 1][i]) state_sens.row(i).setZero();
            }
        }
    }
    return jac;
}

VectorXd pack(const VectorXd& x_start, const std::vector<VectorXd>& w) {
    Eigen::Index q = w.empty() ? 0 : w.front().size();
    VectorXd z(x_start.size() + q * static_cast<Eigen::Index>(w.size()));
    z.head(x_start.size()) = x_start;
    for (std::size_t k = 0; k < w.size(); ++k) {
        z.segment(x_start.size() + q * static_cast<Eigen::Index>(k), q) = w[k];
    }
    return z;
}

void unpack(const VectorXd& z, Eigen::Index n, Eigen::Index q, std::size_t steps,
            VectorXd& x_start, std::vector<VectorXd>& w) {
    x_start = z.head(n);
    w.resize(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        w[k] = z.segment(n + q * static_cast<Eigen::Index>(k), q);
    }
}

VectorXd project_variables(const MheProblem& prob, const VectorXd& z) {
    const Eigen::Index n = prob.system->state_dim();
    const Eigen::Index q = prob.system->disturbance_dim();
    VectorXd out = z;
    out.head(n) = prob.system->state_box().project(out.head(n));
    for (Eigen::Index k = 0; n + q * (k + 1) <= z.size(); ++k) {
        out.segment(n + q * k, q) = prob.system->disturbance_box().project(out.segment(n + q * k, q));
    }
    return out;
}

} // namespace

ResidualSystem assemble_residuals(const MheProblem& prob, const VectorXd& x_start,
                                  const std::vector<VectorXd>& w) {
    check_problem_inputs(prob, x_start, w);
    const ResidualWorkspace ws(prob);
    const Rollout r = roll_out(prob, x_start, w);
    ResidualSystem out;
    out.residuals = residual_vector(prob, ws, x_start, w, r);
    out.jacobian = residual_jacobian(prob, ws, w, r);
    return out;
}

MheSolution solve(const MheProblem& prob, std::optional<WarmStart> init) {
    const Eigen::Index n = prob.system->state_dim();
    const Eigen::Index q = prob.system->disturbance_dim();
    const auto steps = static_cast<std::size_t>(prob.window_length());
    const bool projected = prob.config->constraint_mode == ConstraintMode::Projected;
    const SolverSettings& opts = prob.config->solver;

    VectorXd x_start;
    std::vector<VectorXd> w;
    if (init) {
        x_start = std::move(init->x_start);
        w = std::move(init->disturbances);
    } else {
        x_start = prob.prior;
        w.assign(steps, VectorXd::Zero(q));
    }
    check_problem_inputs(prob, x_start, w);

    MheSolution sol;
    sol.solved_at = prob.current_time;
    sol.window_start = prob.window_start;

    // Degenerate window: nothing to optimize, the estimate is the prior.
    if (steps == 0) {
        sol.states = {projected ? prob.system->state_box().project(x_start) : x_start};
        sol.cost = cost(prob, sol.states.front(), {});
        sol.converged = true;
        return sol;
    }

    const ResidualWorkspace ws(prob);
    VectorXd z = pack(x_start, w);
    if (projected) z = project_variables(prob, z);
    unpack(z, n, q, steps, x_start, w);

    Rollout r = roll_out(prob, x_start, w);
    VectorXd res = residual_vector(prob, ws, x_start, w, r);
    if (!res.allFinite()) {
        throw SolverError("mhe solve: divergent rollout at the initial iterate");
    }
    double sq = res.squaredNorm();
    MatrixXd jac = residual_jacobian(prob, ws, w, r);
    VectorXd grad = 2.0 * (jac.transpose() * res);
    double damping = opts.initial_damping;

    int iterations = 0;
    bool converged = grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance;
    while (!converged && iterations < opts.max_iterations) {
        const MatrixXd jtj = jac.transpose() * jac;
        bool accepted = false;
        VectorXd dz;
        while (!accepted) {
            MatrixXd damped = jtj;
            damped.diagonal().array() += damping;
            dz = Eigen::LDLT<MatrixXd>(damped).solve(-0.5 * grad);
            VectorXd z_trial = z + dz;
            if (projected) z_trial = project_variables(prob, z_trial);

            VectorXd xt;
            std::vector<VectorXd> wt;
            unpack(z_trial, n, q, steps, xt, wt);
            const Rollout rt = roll_out(prob, xt, wt);
            const VectorXd rest = residual_vector(prob, ws, xt, wt, rt);
            const double sqt = rest.allFinite() ? rest.squaredNorm()
                                                : std::numeric_limits<double>::infinity();
            if (sqt < sq) {
                accepted = true;
                z = std::move(z_trial);
                x_start = std::move(xt);
                w = std::move(wt);
                r = rt;
                res = rest;
                sq = sqt;
                damping = std::max(damping / opts.damping_scale, 1e-12);
            } else {
                damping *= opts.damping_scale;
                if (damping > 1e14) break; // stalled; no further progress possible
            }
        }
        ++iterations;
        if (!accepted) break;

        jac = residual_jacobian(prob, ws, w, r);
        grad = 2.0 * (jac.transpose() * res);
        converged = grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance;
        if (dz.norm() <= opts.step_tolerance * (z.norm() + opts.step_tolerance)) break;
    }

    sol.states = r.states;
    sol.disturbances = w;
    sol.outputs = r.outputs;
    sol.cost = sq;
    sol.iterations = iterations;
    sol.first_order_norm = grad.lpNorm<Eigen::Infinity>();
    sol.converged = converged;
    return sol;
}

VectorXd open_loop_predict(const VectorXd& x_prev, const VectorXd& u_prev,
                           const NonlinearSystem& system) {
    return system.transition(x_prev, u_prev, VectorXd::Zero(system.disturbance_dim()));
}

double max_generalized_eigenvalue(const MatrixXd& P2, const MatrixXd& P1) {
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(P2, P1, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) {
        throw ConfigError("max_generalized_eigenvalue: decomposition failed (inputs SPD?)");
    }
    return es.eigenvalues().maxCoeff();
}

double horizon_contraction(const IossCertificate& cert, Time horizon) {
    const double lmax = max_generalized_eigenvalue(cert.P2, cert.P1);
    return 4.0 * lmax * lmax * std::pow(cert.eta, static_cast<double>(horizon));
}

Time min_horizon(const IossCertificate& cert, Time max_gap) {
    validate(cert);
    const double lmax = max_generalized_eigenvalue(cert.P2, cert.P1);
    const double four_l2 = 4.0 * lmax * lmax;
    Time m = std::max<Time>(1, max_gap);
    // eta < 1 guarantees termination; the explicit cap guards degenerate
    // floating-point inputs.
    for (Time guard = 0; guard < 1000000; ++guard, ++m) {
        if (four_l2 * std::pow(cert.eta, static_cast<double>(m)) < 1.0) return m;
    }
    throw UnsatisfiableHorizonError("min_horizon: no horizon satisfies the contraction inequality");
}

double error_bound(const IossCertificate& cert, Time horizon, double initial_error_norm,
                   std::span<const double> disturbance_norms, Time t) {
    validate(cert);
    if (t < 0) throw ConfigError("error_bound: t must be >= 0");
    if (disturbance_norms.size() < static_cast<std::size_t>(t)) {
        throw DimensionError("error_bound: need a disturbance norm for every step before t");
    }
    const double lmax_pencil = max_generalized_eigenvalue(cert.P2, cert.P1);
    const double contraction =
        4.0 * lmax_pencil * lmax_pencil * std::pow(cert.eta, static_cast<double>(horizon));
    if (!(contraction < 1.0)) {
        throw UnsatisfiableHorizonError("error_bound: horizon fails the contraction inequality");
    }
    const double sqrt_rho = std::sqrt(std::pow(contraction, 1.0 / static_cast<double>(horizon)));

    Eigen::SelfAdjointEigenSolver<MatrixXd> p1(cert.P1, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> p2(cert.P2, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixXd> qq(cert.Q, Eigen::EigenvaluesOnly);
    const double lmin_p1 = p1.eigenvalues().minCoeff();
    const double lmax_p2 = p2.eigenvalues().maxCoeff();
    const double lmax_q = qq.eigenvalues().maxCoeff();

    double bound = 2.0 * std::sqrt(lmax_pencil * lmax_p2 / lmin_p1) *
                   std::pow(sqrt_rho, static_cast<double>(t)) * initial_error_norm;
    const double gain_w = 2.0 * std::sqrt(lmax_pencil * lmax_q / lmin_p1);
    for (Time j = 0; j < t; ++j) {
        bound += gain_w * std::pow(sqrt_rho, static_cast<double>(t - j - 1)) *
                 disturbance_norms[static_cast<std::size_t>(j)];
    }
    return bound;
}

} // namespace hest
