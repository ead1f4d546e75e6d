#include "hest/thyroid.hpp"

#include <string>

namespace hest {

NonlinearSystem build_thyroid(const ThyroidParams& params) {
    if (params.step_hours <= 0.0) throw ConfigError("build_thyroid: step_hours must be > 0");
    const ThyroidParams p = params;
    const double tau = p.step_hours;

    auto guard = [p](double tsh, double ft4) {
        if (p.s1 + ft4 <= 0.0 || p.s2 + tsh <= 0.0) {
            throw ModelDomainError("thyroid model left its domain: saturation denominator <= 0 "
                                   "(tsh=" + std::to_string(tsh) + ", ft4=" + std::to_string(ft4) +
                                   ")");
        }
    };

    NonlinearSystem sys(
        2, 1, 3, 1,
        [p, tau, guard](const VectorXd& x, const VectorXd& u, const VectorXd& w) -> VectorXd {
            const double tsh = x[0];
            const double ft4 = x[1];
            guard(tsh, ft4);
            VectorXd next(2);
            next[0] = p.p1 * tau * (p.setpoint - ft4) / (p.s1 + ft4) + p.p1 * tau +
                      (1.0 - p.d1 * tau) * tsh + w[0];
            next[1] = tau * p.p2 * tsh / (p.s2 + tsh) + (1.0 - p.d2 * tau) * ft4 + u[0] * tau +
                      w[1];
            return next;
        },
        [](const VectorXd& x, const VectorXd&, const VectorXd& w) -> VectorXd {
            VectorXd y(1);
            y[0] = x[0] + w[2];
            return y;
        });

    sys.with_transition_jacobians(
        [p, tau, guard](const VectorXd& x, const VectorXd&, const VectorXd&) -> MapJacobians {
            const double tsh = x[0];
            const double ft4 = x[1];
            guard(tsh, ft4);
            MapJacobians jac;
            jac.wrt_state = MatrixXd(2, 2);
            const double den1 = p.s1 + ft4;
            const double den2 = p.s2 + tsh;
            jac.wrt_state(0, 0) = 1.0 - p.d1 * tau;
            jac.wrt_state(0, 1) = -p.p1 * tau * (p.s1 + p.setpoint) / (den1 * den1);
            jac.wrt_state(1, 0) = tau * p.p2 * p.s2 / (den2 * den2);
            jac.wrt_state(1, 1) = 1.0 - p.d2 * tau;
            jac.wrt_disturbance = MatrixXd::Zero(2, 3);
            jac.wrt_disturbance(0, 0) = 1.0;
            jac.wrt_disturbance(1, 1) = 1.0;
            return jac;
        });
    sys.with_output_jacobians([](const VectorXd&, const VectorXd&, const VectorXd&) -> MapJacobians {
        MapJacobians jac;
        jac.wrt_state = (MatrixXd(1, 2) << 1.0, 0.0).finished();
        jac.wrt_disturbance = (MatrixXd(1, 3) << 0.0, 0.0, 1.0).finished();
        return jac;
    });
    return sys;
}

std::vector<std::pair<Time, double>> medication_schedule(Time start_day, Time skip_day,
                                                         double dose, Time steps_per_day) {
    if (steps_per_day < 1) throw ConfigError("medication_schedule: steps_per_day must be >= 1");
    std::vector<std::pair<Time, double>> table;
    table.emplace_back(0, 0.0);
    table.emplace_back(start_day * steps_per_day, dose);
    if (skip_day > start_day) {
        table.emplace_back(skip_day * steps_per_day, 0.0);
        table.emplace_back((skip_day + 1) * steps_per_day, dose);
    }
    return table;
}

} // namespace hest
