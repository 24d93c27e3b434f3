// Limited-memory BFGS minimizer with a strong-Wolfe line search.
//
// Works on any smooth objective exposing value + gradient. The search keeps
// the best point seen across every evaluation (including rejected line-search
// trials), so the returned iterate never has a higher objective than any
// point visited.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace spoofguard {

struct LbfgsOptions {
    int max_iterations = 250;
    int history = 10;              // stored curvature pairs
    double grad_tolerance = 1e-7;  // stop when the gradient inf-norm drops below
    double wolfe_c1 = 1e-4;        // sufficient-decrease constant
    double wolfe_c2 = 0.9;         // curvature constant
    int max_line_search_steps = 30;
};

/// Per-iteration progress snapshot handed to the optional callback.
struct LbfgsIterate {
    int iteration = 0;
    double loss = 0.0;       // objective at the accepted iterate
    double best_loss = 0.0;  // lowest objective observed so far
    double grad_inf_norm = 0.0;
    double step = 0.0;       // accepted line-search step length
};

struct LbfgsResult {
    Eigen::VectorXd best_x;
    double best_loss = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;  // gradient tolerance reached
    std::string stop_reason;
};

/// Signals a non-finite objective value during optimization.
class NonFiniteLossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct CurvaturePair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double sy = 0.0;
};

}  // namespace detail

/// Minimizes `objective(x, grad) -> loss` starting from x0.
///
/// The direction comes from the standard two-loop recursion over at most
/// `history` curvature pairs, scaled by the latest s.y/y.y. Steps must
/// satisfy the strong Wolfe conditions
///   f(x+a*d) <= f(x) + c1*a*g.d   and   |g(x+a*d).d| <= c2*|g.d|,
/// located by bracketing plus bisection zoom. When the search budget runs out
/// before both conditions hold, the best strictly-decreasing trial is taken
/// instead, so accepted losses are monotonically non-increasing either way.
///
/// Throws NonFiniteLossError when the objective turns NaN/Inf, reporting the
/// iteration that produced it.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& objective, Eigen::VectorXd x0,
                           const LbfgsOptions& opt = {},
                           const std::function<void(const LbfgsIterate&)>& on_iteration = {}) {
    if (opt.history < 1)
        throw std::invalid_argument("lbfgs_minimize: history must be >= 1");
    const auto n = x0.size();

    double best_loss = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x0;
    int current_iteration = 0;
    auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        const double f = objective(x, grad);
        if (!std::isfinite(f))
            throw NonFiniteLossError("non-finite objective at iteration " +
                                     std::to_string(current_iteration));
        if (f < best_loss) {
            best_loss = f;
            best_x = x;
        }
        return f;
    };

    Eigen::VectorXd x = std::move(x0);
    Eigen::VectorXd grad(n);
    double f = eval(x, grad);

    LbfgsResult result;
    std::deque<detail::CurvaturePair> pairs;
    Eigen::VectorXd direction(n), x_trial(n), grad_trial(n);

    for (int k = 0; k < opt.max_iterations; ++k) {
        current_iteration = k + 1;
        if (grad.lpNorm<Eigen::Infinity>() < opt.grad_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion.
        direction = -grad;
        if (!pairs.empty()) {
            Eigen::VectorXd alpha_mem(static_cast<Eigen::Index>(pairs.size()));
            for (auto i = static_cast<Eigen::Index>(pairs.size()) - 1; i >= 0; --i) {
                const auto& p = pairs[static_cast<std::size_t>(i)];
                alpha_mem[i] = p.s.dot(direction) / p.sy;
                direction -= alpha_mem[i] * p.y;
            }
            direction *= pairs.back().sy / pairs.back().y.squaredNorm();
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(pairs.size()); ++i) {
                const auto& p = pairs[static_cast<std::size_t>(i)];
                const double beta = p.y.dot(direction) / p.sy;
                direction += (alpha_mem[i] - beta) * p.s;
            }
        }

        double dphi0 = grad.dot(direction);
        if (dphi0 >= 0.0) {
            // Numerically lost the descent property; restart from steepest descent.
            pairs.clear();
            direction = -grad;
            dphi0 = grad.dot(direction);
        }

        // --- strong-Wolfe line search ---
        const double phi0 = f;
        double last_alpha = std::numeric_limits<double>::quiet_NaN();
        double fallback_alpha = -1.0, fallback_phi = phi0;
        auto phi_at = [&](double a) {
            x_trial = x + a * direction;
            const double v = eval(x_trial, grad_trial);
            last_alpha = a;
            if (v < fallback_phi) {
                fallback_phi = v;
                fallback_alpha = a;
            }
            return v;
        };
        auto wolfe_curvature = [&](double dphi) { return std::abs(dphi) <= -opt.wolfe_c2 * dphi0; };

        double accepted_alpha = -1.0, accepted_phi = 0.0;
        double alpha_prev = 0.0, phi_prev = phi0;
        double alpha = (k == 0) ? std::min(1.0, 1.0 / grad.cwiseAbs().sum()) : 1.0;
        double lo = -1.0, hi = -1.0, phi_lo = 0.0;
        bool bracketed = false;

        for (int ls = 0; ls < opt.max_line_search_steps; ++ls) {
            const double phi_a = phi_at(alpha);
            if (phi_a > phi0 + opt.wolfe_c1 * alpha * dphi0 || (ls > 0 && phi_a >= phi_prev)) {
                lo = alpha_prev;
                phi_lo = phi_prev;
                hi = alpha;
                bracketed = true;
                break;
            }
            const double dphi_a = grad_trial.dot(direction);
            if (wolfe_curvature(dphi_a)) {
                accepted_alpha = alpha;
                accepted_phi = phi_a;
                break;
            }
            if (dphi_a >= 0.0) {
                lo = alpha;
                phi_lo = phi_a;
                hi = alpha_prev;
                bracketed = true;
                break;
            }
            alpha_prev = alpha;
            phi_prev = phi_a;
            alpha *= 2.0;
        }

        if (bracketed && accepted_alpha < 0.0) {
            for (int z = 0; z < opt.max_line_search_steps; ++z) {
                const double a_j = 0.5 * (lo + hi);
                const double phi_j = phi_at(a_j);
                if (phi_j > phi0 + opt.wolfe_c1 * a_j * dphi0 || phi_j >= phi_lo) {
                    hi = a_j;
                } else {
                    const double dphi_j = grad_trial.dot(direction);
                    if (wolfe_curvature(dphi_j)) {
                        accepted_alpha = a_j;
                        accepted_phi = phi_j;
                        break;
                    }
                    if (dphi_j * (hi - lo) >= 0.0)
                        hi = lo;
                    lo = a_j;
                    phi_lo = phi_j;
                }
            }
        }

        if (accepted_alpha < 0.0 && fallback_alpha > 0.0 && fallback_phi < phi0) {
            // Wolfe acceptance did not land within budget; the best strictly
            // decreasing trial still moves downhill.
            accepted_alpha = fallback_alpha;
            accepted_phi = fallback_phi;
        }
        if (accepted_alpha < 0.0) {
            result.stop_reason = "line search failed";
            break;
        }
        if (last_alpha != accepted_alpha)
            accepted_phi = phi_at(accepted_alpha);  // restore trial state at the accepted step

        detail::CurvaturePair p;
        p.s = x_trial - x;
        p.y = grad_trial - grad;
        p.sy = p.s.dot(p.y);
        if (p.sy > 1e-10 * p.s.norm() * p.y.norm()) {
            pairs.push_back(std::move(p));
            if (static_cast<int>(pairs.size()) > opt.history)
                pairs.pop_front();
        }

        x.swap(x_trial);
        grad.swap(grad_trial);
        f = accepted_phi;
        result.iterations = k + 1;

        if (on_iteration)
            on_iteration({k + 1, f, best_loss, grad.lpNorm<Eigen::Infinity>(), accepted_alpha});
    }

    if (result.stop_reason.empty())
        result.stop_reason =
            result.converged ? "gradient tolerance reached" : "iteration budget exhausted";
    result.best_x = std::move(best_x);
    result.best_loss = best_loss;
    return result;
}

}  // namespace spoofguard
