#include "boxflow/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "boxflow/active_set.hpp"
#include "boxflow/baselines.hpp"
#include "boxflow/errors.hpp"
#include "boxflow/flow.hpp"
#include "boxflow/kkt.hpp"
#include "boxflow/ode.hpp"

namespace boxflow {

namespace {

double box_violation(const Vec& y, const BoxProblem& problem) {
    return check_feasible(y, problem, 0.0).worst_violation;
}

// Remembers the last gradient so the observer and the next right-hand side
// evaluation at the same state share one call.
class GradientCache {
public:
    GradientCache(const BoxProblem& problem, SolveStats& stats) : problem_(problem), stats_(stats) {}

    const Vec& at(const Vec& theta) {
        if (!valid_ || theta != theta_) {
            theta_ = theta;
            grad_ = problem_.gradient(theta);
            ++stats_.gradient_evals;
            valid_ = true;
        }
        return grad_;
    }

private:
    const BoxProblem& problem_;
    SolveStats& stats_;
    Vec theta_;
    Vec grad_;
    bool valid_ = false;
};

} // namespace

SolveReport solve_to_stationarity(const BoxProblem& problem, const GainMatrix& gain,
                                  const SolveOptions& opts, const Vec& theta0) {
    opts.validate();
    if (theta0.size() != problem.dim() || gain.dim() != problem.dim())
        throw ArgumentError("solve_to_stationarity: dimension mismatch");
    if (!theta0.allFinite())
        throw ArgumentError("solve_to_stationarity: initial point is not finite");

    if (opts.method == Method::ProjectedGradientBaseline) {
        PgdOptions pgd;
        pgd.stationarity_tol = opts.stationarity_tol;
        pgd.active_tol = opts.active_tol;
        pgd.degeneracy_tol = opts.degeneracy_tol;
        return projected_gradient_descent(problem, theta0, pgd);
    }
    if (opts.method == Method::UnconstrainedLike && !gain.is_diagonal() &&
        !opts.allow_dense_limited)
        throw MethodContractError(
            "solve_to_stationarity: the unconstrained-like method requires a diagonal gain");

    const auto start = std::chrono::steady_clock::now();
    SolveReport rep;
    rep.problem = problem.name();
    rep.method = opts.method;
    rep.initial_point_clamped = !check_feasible(theta0, problem, 0.0).feasible;
    const Vec y0 = project_to_box(theta0, problem);

    GradientCache grads(problem, rep.stats);
    std::optional<ActiveBoundSet> last_ip;
    const bool general = opts.method == Method::GeneralDynamic;
    const bool clamp_states = general || opts.limiter.kind == LimiterMode::Kind::Exact;

    ode::RhsFn rhs = [&](double, const Vec& y, Vec& dydt) {
        ++rep.stats.rhs_evals;
        if (general) {
            // Stage states of an explicit step may leave the box slightly; the
            // feedback QP is posed at the nearest feasible point.
            const Vec theta = project_to_box(y, problem);
            auto out = rhs_general(theta, grads.at(theta), gain, problem, opts.active_tol,
                                   last_ip ? &*last_ip : nullptr);
            ++rep.stats.qp_solves;
            last_ip = std::move(out.fpdop.i_p);
            dydt = std::move(out.u);
        } else {
            // The objective is only defined on the box: a softened state that
            // dipped outside sees the gradient at its projection, while the
            // limiter pulls the state itself back.
            dydt = rhs_limited(y, grads.at(project_to_box(y, problem)), gain, problem,
                               opts.limiter, opts.active_tol, opts.allow_dense_limited);
        }
    };

    auto sample_at = [&](double tau, const Vec& y) {
        TrajectorySample s;
        s.tau = tau;
        s.theta = project_to_box(y, problem);
        s.f = problem.objective(s.theta);
        ++rep.stats.objective_evals;
        s.residual = projected_residual(s.theta, grads.at(s.theta), problem, opts.active_tol)
                         .lpNorm<Eigen::Infinity>();
        return s;
    };

    rep.samples.push_back(sample_at(0.0, y0));

    ode::IntegratorConfig cfg;
    cfg.kind = opts.integrator;
    cfg.rel_tol = opts.rel_tol;
    cfg.abs_tol = opts.abs_tol;
    cfg.initial_step = opts.initial_step;
    cfg.max_step = opts.max_step;
    cfg.max_steps = opts.max_steps;
    cfg.output_interval = opts.sample_interval;

    if (opts.integrator == IntegratorKind::StiffImplicit)
        cfg.jacobian = [&](double, const Vec& y, Mat& jac) {
            const Index n = y.size();
            const Vec theta = project_to_box(y, problem);
            const Vec g = grads.at(theta);
            // Hessian columns by forward differences of the gradient, stepping
            // inward at an upper bound. The step is cbrt(eps) rather than
            // sqrt(eps): gradients that are themselves differenced carry
            // errors that a shorter step blows up.
            Mat hess(n, n);
            Vec tp = theta;
            const double step = std::cbrt(std::numeric_limits<double>::epsilon());
            for (Index j = 0; j < n; ++j) {
                double dj = step * (1.0 + std::fabs(theta[j]));
                if (theta[j] + dj > problem.upper()[j])
                    dj = -dj;
                tp[j] = theta[j] + dj;
                hess.col(j) = (problem.gradient(tp) - g) / (tp[j] - theta[j]);
                ++rep.stats.gradient_evals;
                tp[j] = theta[j];
            }
            if (general) {
                // Linearization of the feedback law with its optimal active
                // set held fixed.
                const auto out = rhs_general(theta, g, gain, problem, opts.active_tol,
                                             last_ip ? &*last_ip : nullptr);
                ++rep.stats.qp_solves;
                const Mat K = gain.to_dense();
                const Mat h = SelectionMatrixView::from(out.fpdop.i_p, n).matrix();
                Mat P = Mat::Identity(n, n);
                if (h.rows() > 0)
                    P -= h.transpose() * (h * K * h.transpose()).llt().solve(h * K);
                jac = -K * P * hess;
                return;
            }
            // The limited flow is -K grad except on rows the limiter holds at
            // a bound, which are constant (exact) or first-order pull-back
            // (softened).
            jac = -gain.to_dense() * hess;
            const Vec x = -gain.apply(g);
            const bool exact = opts.limiter.kind == LimiterMode::Kind::Exact;
            for (Index i = 0; i < n; ++i) {
                const bool at_hi = y[i] >= problem.upper()[i] - opts.active_tol && x[i] >= 0.0;
                const bool at_lo = y[i] <= problem.lower()[i] + opts.active_tol && x[i] <= 0.0;
                if (!at_hi && !at_lo)
                    continue;
                jac.row(i).setZero();
                if (!exact)
                    jac(i, i) = at_hi ? -opts.limiter.k_upper : -opts.limiter.k_lower;
            }
        };

    std::size_t accepted = 0;
    std::optional<TrajectorySample> pending;
    ode::Observer observer = [&](const ode::StepInfo& info) {
        ++accepted;
        auto s = sample_at(info.t, info.y);
        const bool done = opts.stop_at_stationarity && s.residual < opts.stationarity_tol;
        const bool record = opts.sample_interval > 0.0 ? info.output_point
                                                       : accepted % opts.sample_stride == 0;
        if (record || done) {
            rep.samples.push_back(std::move(s));
            pending.reset();
        } else {
            pending = std::move(s);
        }
        return done ? ode::ObserverAction::Stop : ode::ObserverAction::Continue;
    };

    ode::Projector projector = [&](Vec& y) {
        const double v = box_violation(y, problem);
        rep.stats.max_bound_violation = std::max(rep.stats.max_bound_violation, v);
        if (clamp_states && v > 0.0)
            y = project_to_box(y, problem);
    };

    auto absorb = [&](const ode::IntegrationStats& s) {
        rep.stats.accepted_steps = s.accepted_steps;
        rep.stats.rejected_steps = s.rejected_steps;
        rep.stats.newton_iters = s.newton_iters;
        rep.stats.jacobian_evals = s.jacobian_evals;
    };
    auto finish = [&](double tau, const Vec& y) {
        if (pending) {
            rep.samples.push_back(std::move(*pending));
            pending.reset();
        }
        rep.final_theta = project_to_box(y, problem);
        rep.final_tau = tau;
        rep.final_f = problem.objective(rep.final_theta);
        ++rep.stats.objective_evals;
        // The integrator resolves states only to abs_tol, so a bound closer
        // than that is reported as active.
        rep.kkt = kkt_report(rep.final_theta, grads.at(rep.final_theta), problem,
                             std::max(opts.active_tol, opts.abs_tol), opts.degeneracy_tol);
        rep.converged = rep.kkt.residual_norm < opts.stationarity_tol;
        rep.stats.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    if (opts.stop_at_stationarity && rep.samples.front().residual < opts.stationarity_tol) {
        finish(0.0, y0);
        return rep;
    }

    try {
        const auto res = ode::integrate(rhs, y0, 0.0, opts.horizon, cfg, observer, projector);
        absorb(res.stats);
        finish(res.t, res.y);
    } catch (const ode::IntegratorError& e) {
        absorb(e.stats());
        finish(e.t(), e.y().allFinite() ? e.y() : rep.samples.back().theta);
        throw SolveError(std::string("solve_to_stationarity: ") + e.what(), rep);
    }
    return rep;
}

} // namespace boxflow

namespace boxflow {

TrajectoryComparison compare_trajectories(const SolveReport& a, const SolveReport& b) {
    if (a.samples.empty() || b.samples.empty())
        throw ArgumentError("compare_trajectories: both runs need samples");
    if (a.final_theta.size() != b.final_theta.size())
        throw ArgumentError("compare_trajectories: dimension mismatch");

    TrajectoryComparison out;
    out.final_difference = (a.final_theta - b.final_theta).lpNorm<Eigen::Infinity>();
    const double end = std::min(a.samples.back().tau, b.samples.back().tau);
    const auto& bs = b.samples;
    for (const auto& s : a.samples) {
        if (s.tau > end)
            break;
        auto it = std::lower_bound(bs.begin(), bs.end(), s.tau,
                                   [](const TrajectorySample& x, double t) { return x.tau < t; });
        if (it == bs.end() || (it != bs.begin() && s.tau - std::prev(it)->tau < it->tau - s.tau))
            --it;
        out.max_difference =
            std::max(out.max_difference, (s.theta - it->theta).lpNorm<Eigen::Infinity>());
        ++out.points;
    }
    return out;
}

} // namespace boxflow
