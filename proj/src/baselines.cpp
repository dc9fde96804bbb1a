#include "boxflow/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "boxflow/errors.hpp"
#include "boxflow/kkt.hpp"

namespace boxflow {

void PgdOptions::validate() const {
    if (max_iters < 1)
        throw ArgumentError("PgdOptions: max_iters must be at least 1");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
        throw ArgumentError("PgdOptions: armijo_c must lie in (0, 1)");
    if (!(backtrack_ratio > 0.0 && backtrack_ratio < 1.0))
        throw ArgumentError("PgdOptions: backtrack_ratio must lie in (0, 1)");
    if (!(initial_step > 0.0) || !(stationarity_tol > 0.0) || !(active_tol > 0.0))
        throw ArgumentError("PgdOptions: steps and tolerances must be positive");
}

SolveReport projected_gradient_descent(const BoxProblem& problem, const Vec& theta0,
                                       const PgdOptions& opts) {
    opts.validate();
    if (theta0.size() != problem.dim())
        throw ArgumentError("projected_gradient_descent: dimension mismatch");
    const auto start = std::chrono::steady_clock::now();

    SolveReport rep;
    rep.problem = problem.name();
    rep.method = Method::ProjectedGradientBaseline;
    rep.initial_point_clamped = !check_feasible(theta0, problem, 0.0).feasible;

    Vec theta = project_to_box(theta0, problem);
    double f = problem.objective(theta);
    Vec grad = problem.gradient(theta);
    ++rep.stats.objective_evals;
    ++rep.stats.gradient_evals;

    auto residual_of = [&](const Vec& th, const Vec& g) {
        return projected_residual(th, g, problem, opts.active_tol).lpNorm<Eigen::Infinity>();
    };
    auto finish = [&](double iter) {
        rep.final_theta = theta;
        rep.final_f = f;
        rep.final_tau = iter;
        rep.kkt = kkt_report(theta, grad, problem, opts.active_tol, opts.degeneracy_tol);
        rep.converged = rep.kkt.residual_norm < opts.stationarity_tol;
        rep.stats.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    double residual = residual_of(theta, grad);
    rep.samples.push_back({0.0, theta, f, residual});

    const double roundoff = 8.0 * std::numeric_limits<double>::epsilon();
    const double alpha_min = 1e-14 * opts.initial_step;
    std::size_t iter = 0;
    while (residual >= opts.stationarity_tol && iter < opts.max_iters) {
        double alpha = opts.initial_step;
        Vec trial;
        double f_trial = 0.0;
        for (;;) {
            trial = project_to_box(theta - alpha * grad, problem);
            f_trial = problem.objective(trial);
            ++rep.stats.objective_evals;
            const double decrease = grad.dot(trial - theta);
            if (std::isfinite(f_trial) && f_trial < f && f_trial <= f + opts.armijo_c * decrease)
                break;
            // Close to a minimizer the decrease drops below the rounding error
            // of f; fall back to accepting a step that does not raise f beyond
            // that noise and shrinks the projected gradient.
            if (std::isfinite(f_trial) && std::fabs(f_trial - f) <= roundoff * (1.0 + std::fabs(f))) {
                const Vec g_trial = problem.gradient(trial);
                ++rep.stats.gradient_evals;
                if (residual_of(trial, g_trial) < residual)
                    break;
            }
            ++rep.stats.rejected_steps;
            alpha *= opts.backtrack_ratio;
            if (alpha < alpha_min) {
                finish(static_cast<double>(iter));
                std::ostringstream os;
                os << "projected_gradient_descent: line search stalled at iteration " << iter
                   << " (residual " << residual << ")";
                throw SolveError(os.str(), rep);
            }
        }
        theta = std::move(trial);
        f = f_trial;
        grad = problem.gradient(theta);
        ++rep.stats.gradient_evals;
        ++rep.stats.accepted_steps;
        ++iter;
        residual = residual_of(theta, grad);
        rep.samples.push_back({static_cast<double>(iter), theta, f, residual});
    }
    finish(static_cast<double>(iter));
    return rep;
}

} // namespace boxflow
