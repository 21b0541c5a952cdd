#pragma once

// Dense Gauss-Newton / Levenberg-Marquardt helpers shared by the calibration solvers.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace arsafe::detail {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using ResidualFn = std::function<VecX(const VecX&)>;

/// Central-difference Jacobian with per-parameter steps.
inline MatX numeric_jacobian(const ResidualFn& f, const VecX& x, Eigen::Index m, const VecX& steps) {
    MatX jac(m, x.size());
    VecX xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = steps[i];
        xp[i] = x[i] + h;
        const VecX rp = f(xp);
        xp[i] = x[i] - h;
        const VecX rm = f(xp);
        xp[i] = x[i];
        jac.col(i) = (rp - rm) / (2.0 * h);
    }
    return jac;
}

inline VecX default_steps(const VecX& x, double rel = 1e-6, double floor = 1e-8) {
    VecX h(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) h[i] = rel * std::max(std::abs(x[i]), floor / rel);
    return h;
}

struct LmOptions {
    int max_iterations = 100;
    int max_consecutive_rejections = 5;
    double gradient_tol = 1e-12;
    double step_tol = 1e-14;
    double cost_tol = 1e-24;
    double divergence_gradient = 1e-6;
};

struct LmOutcome {
    VecX x;
    double initial_cost = 0.0;   // 0.5 * |r|^2
    double final_cost = 0.0;
    int iterations = 0;
    bool diverged = false;
    std::vector<double> cost_history;  // cost after every accepted step, starting with the initial cost
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. `diverged` is set when the
/// first `max_consecutive_rejections` trial steps all increase the cost while the
/// gradient is still above `divergence_gradient`.
inline LmOutcome levenberg_marquardt(const ResidualFn& f, VecX x, const LmOptions& opt,
                                     const std::function<VecX(const VecX&)>& steps_for = {}) {
    LmOutcome out;
    VecX r = f(x);
    double cost = 0.5 * r.squaredNorm();
    out.initial_cost = cost;
    out.cost_history.push_back(cost);
    double lambda = -1.0;
    int rejected = 0;
    bool accepted_any = false;
    double grad_norm = 0.0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        if (cost <= opt.cost_tol) break;
        const VecX h = steps_for ? steps_for(x) : default_steps(x);
        const MatX jac = numeric_jacobian(f, x, r.size(), h);
        const MatX jtj = jac.transpose() * jac;
        const VecX g = jac.transpose() * r;
        grad_norm = g.lpNorm<Eigen::Infinity>();
        if (grad_norm <= opt.gradient_tol * std::max(1.0, cost)) break;
        if (lambda < 0.0) lambda = 1e-3 * jtj.diagonal().maxCoeff();
        bool stepped = false;
        while (rejected < opt.max_consecutive_rejections) {
            MatX a = jtj;
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const VecX delta = a.ldlt().solve(-g);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                ++rejected;
                continue;
            }
            const VecX xn = x + delta;
            const VecX rn = f(xn);
            const double cn = 0.5 * rn.squaredNorm();
            if (std::isfinite(cn) && cn < cost) {
                const bool tiny = delta.norm() <= opt.step_tol * (x.norm() + opt.step_tol);
                x = xn;
                r = rn;
                cost = cn;
                out.cost_history.push_back(cost);
                lambda = std::max(lambda / 10.0, 1e-15);
                rejected = 0;
                accepted_any = true;
                stepped = !tiny;
                break;
            }
            lambda *= 10.0;
            ++rejected;
        }
        if (!stepped) {
            if (rejected >= opt.max_consecutive_rejections && !accepted_any &&
                grad_norm > opt.divergence_gradient * std::max(1.0, cost)) {
                out.diverged = true;
            }
            break;
        }
    }
    out.x = x;
    out.final_cost = cost;
    return out;
}

}  // namespace arsafe::detail
