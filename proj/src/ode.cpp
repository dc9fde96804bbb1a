#include "boxflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "boxflow/simd/kernels.hpp"
#include "detail.hpp"

namespace boxflow::ode {

using detail::view;

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw ArgumentError("IntegratorConfig: tolerances must be positive");
    if (max_steps < 1)
        throw ArgumentError("IntegratorConfig: max_steps must be at least 1");
    if (initial_step && !(*initial_step > 0.0))
        throw ArgumentError("IntegratorConfig: initial_step must be positive");
    if (max_step && !(*max_step > 0.0))
        throw ArgumentError("IntegratorConfig: max_step must be positive");
    if (output_interval < 0.0)
        throw ArgumentError("IntegratorConfig: output_interval must be nonnegative");
}

StepOutcome control_step(double step, double error_estimate, double exponent) {
    StepOutcome out;
    out.error_estimate = error_estimate;
    out.accepted = error_estimate <= 1.0;
    double factor = 5.0;
    if (error_estimate > 0.0)
        factor = std::min(5.0, std::max(0.2, 0.9 * std::pow(error_estimate, -exponent)));
    if (!out.accepted)
        factor = std::min(factor, 0.9);
    if (!std::isfinite(error_estimate))
        factor = 0.2;
    out.next_step = step * factor;
    return out;
}

namespace {

void check_span(const Vec& y0, double t0, double t1) {
    if (!(t1 > t0))
        throw ArgumentError("integrate: span must satisfy t1 > t0");
    if (!y0.allFinite())
        throw ArgumentError("integrate: initial state is not finite");
}

// Next point the integrator must land on exactly: the next output point or t1.
class OutputClock {
public:
    OutputClock(double t0, double t1, double interval) : t0_(t0), t1_(t1), dt_(interval) {}

    double next() const {
        if (dt_ <= 0.0)
            return t1_;
        const double t = t0_ + static_cast<double>(k_) * dt_;
        return t >= t1_ - 1e-12 * (t1_ - t0_) ? t1_ : t;
    }
    void advance() { ++k_; }

private:
    double t0_;
    double t1_;
    double dt_;
    std::size_t k_ = 1;
};

// Bookkeeping shared by both integrators.
struct Driver {
    const IntegratorConfig& cfg;
    double t0;
    double t1;
    double span;
    double h_min;
    OutputClock clock;
    IntegrationStats stats;

    Driver(const IntegratorConfig& c, double a, double b)
        : cfg(c), t0(a), t1(b), span(b - a), h_min(1e-14 * (b - a)),
          clock(a, b, c.output_interval) {}

    double initial_step() const { return clamp_step(cfg.initial_step.value_or(1e-2 * span)); }

    double clamp_step(double h) const {
        if (cfg.max_step)
            h = std::min(h, *cfg.max_step);
        return h;
    }

    [[noreturn]] void fail(IntegratorError::Kind kind, const std::string& what, double t,
                           const Vec& y) const {
        std::ostringstream os;
        os << what << " at t = " << t;
        throw IntegratorError(kind, os.str(), t, y, stats);
    }
};

// Result of truncating a proposed step to the next landing point.
struct PlannedStep {
    double h;
    bool landing;
    double target;
};

PlannedStep plan(Driver& d, double t, double h) {
    const double target = d.clock.next();
    if (t + h >= target - 1e-12 * d.span)
        return {target - t, true, target};
    return {h, false, target};
}

} // namespace

IntegrationResult integrate_explicit(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                                     const IntegratorConfig& cfg, const Observer& observer,
                                     const Projector& project) {
    cfg.validate();
    check_span(y0, t0, t1);

    // Dormand-Prince 5(4) tableau.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                     b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const auto& K = simd::active();
    Driver d(cfg, t0, t1);
    const Index n = y0.size();

    double t = t0;
    Vec y = y0;
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

    auto eval = [&](double tt, const Vec& yy, Vec& out) {
        rhs(tt, yy, out);
        ++d.stats.rhs_evals;
    };
    auto combine = [&](Vec& out, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
        out = y;
        for (const auto& [a, k] : terms)
            if (a != 0.0)
                K.axpy(h * a, view(*k), view(out));
    };

    // Evaluation at an accepted state: a model failure here ends the run.
    auto eval_state = [&](double tt, const Vec& yy, Vec& out) {
        try {
            eval(tt, yy, out);
        } catch (const ModelError& e) {
            d.fail(IntegratorError::Kind::NonFinite, std::string("rhs evaluation failed: ") + e.what(), tt, yy);
        } catch (const EvaluationError& e) {
            d.fail(IntegratorError::Kind::NonFinite, std::string("rhs evaluation failed: ") + e.what(), tt, yy);
        }
    };

    eval_state(t, y, k1);
    double h = d.initial_step();

    while (t < t1) {
        if (d.stats.accepted_steps + d.stats.rejected_steps >= cfg.max_steps)
            d.fail(IntegratorError::Kind::StepBudget, "integrate_explicit: step budget exhausted", t, y);

        const PlannedStep step = plan(d, t, h);
        if (step.h <= d.h_min) {
            // The remaining gap is at rounding level; snap onto the target.
            t = step.target;
            if (step.target != t1)
                d.clock.advance();
            continue;
        }
        const double hs = step.h;

        double errnorm = std::numeric_limits<double>::infinity();
        try {
            combine(ytmp, hs, {{a21, &k1}});
            eval(t + c2 * hs, ytmp, k2);
            combine(ytmp, hs, {{a31, &k1}, {a32, &k2}});
            eval(t + c3 * hs, ytmp, k3);
            combine(ytmp, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
            eval(t + c4 * hs, ytmp, k4);
            combine(ytmp, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
            eval(t + c5 * hs, ytmp, k5);
            combine(ytmp, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
            eval(t + hs, ytmp, k6);
            combine(ynew, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
            eval(t + hs, ynew, k7);

            err.setZero();
            for (const auto& [e, k] : {std::pair{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5},
                                       {e6, &k6}, {e7, &k7}})
                K.axpy(hs * e, view(*k), view(err));
            errnorm = K.scaled_error_max(view(err), view(y), view(ynew), cfg.abs_tol, cfg.rel_tol);
            if (!ynew.allFinite() || !k7.allFinite())
                errnorm = std::numeric_limits<double>::infinity();
        } catch (const ModelError&) {
            // The model cannot be evaluated at a trial stage; retry shorter.
        } catch (const EvaluationError&) {
        }

        const StepOutcome outcome = control_step(hs, errnorm, 1.0 / 5.0);
        if (!outcome.accepted) {
            ++d.stats.rejected_steps;
            h = outcome.next_step;
            if (h < d.h_min)
                d.fail(std::isfinite(errnorm) ? IntegratorError::Kind::StepUnderflow
                                              : IntegratorError::Kind::NonFinite,
                       "integrate_explicit: step size underflow", t, y);
            continue;
        }

        ++d.stats.accepted_steps;
        t = step.landing ? step.target : t + hs;
        y.swap(ynew);
        k1.swap(k7);
        if (project) {
            ytmp = y;
            project(y);
            if (y != ytmp)
                eval_state(t, y, k1);
        }
        h = d.clamp_step(step.landing ? std::max(outcome.next_step, h) : outcome.next_step);
        if (step.landing && step.target != t1)
            d.clock.advance();

        if (observer && observer({t, y, step.landing}) == ObserverAction::Stop)
            return {t, y, d.stats, true};
    }
    return {t, y, d.stats, false};
}

IntegrationResult integrate_stiff(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                                  const IntegratorConfig& cfg, const Observer& observer,
                                  const Projector& project) {
    cfg.validate();
    check_span(y0, t0, t1);

    const double gamma = 2.0 - std::sqrt(2.0);
    const double dcoef = gamma / 2.0;
    const double w = std::sqrt(2.0) / 4.0;
    const double alpha2 = 1.0 / (gamma * (2.0 - gamma));
    const double beta2 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
    // Difference between the solution weights [w, w, d] and those of the
    // embedded third-order companion [(1-w)/3, (3w+1)/3, d/3].
    const double e0 = (4.0 * w - 1.0) / 3.0;
    const double e1 = -1.0 / 3.0;
    const double e2 = 2.0 * dcoef / 3.0;
    constexpr int kMaxNewton = 4;
    constexpr double kNewtonTol = 0.03;

    const auto& K = simd::active();
    Driver d(cfg, t0, t1);
    const Index n = y0.size();
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

    double t = t0;
    Vec y = y0;
    Vec f0(n), fz(n), ypert(n), fpert(n), z1(n), z2(n), rc1(n), rc2(n), f1(n), f2(n), est(n),
        g(n), delta(n);
    Mat jac(n, n);
    Eigen::PartialPivLU<Mat> lu;
    bool jac_fresh = false;
    bool have_jac = false;
    double factored_h = -1.0;
    bool just_rejected = false;
    // Contraction rate seen in the latest Newton solve that ran two or more
    // iterations; it lets a single iteration count as converged.
    double newton_rate = 1.0;

    auto eval = [&](double tt, const Vec& yy, Vec& out) {
        rhs(tt, yy, out);
        ++d.stats.rhs_evals;
    };

    // Evaluation at an accepted state: a model failure here ends the run.
    auto eval_state = [&](double tt, const Vec& yy, Vec& out) {
        try {
            eval(tt, yy, out);
        } catch (const ModelError& e) {
            d.fail(IntegratorError::Kind::NonFinite, std::string("rhs evaluation failed: ") + e.what(), tt, yy);
        } catch (const EvaluationError& e) {
            d.fail(IntegratorError::Kind::NonFinite, std::string("rhs evaluation failed: ") + e.what(), tt, yy);
        }
    };

    auto compute_jacobian = [&]() {
        if (cfg.jacobian) {
            try {
                cfg.jacobian(t, y, jac);
            } catch (const ModelError& e) {
                d.fail(IntegratorError::Kind::NonFinite, std::string("jacobian evaluation failed: ") + e.what(), t, y);
            } catch (const EvaluationError& e) {
                d.fail(IntegratorError::Kind::NonFinite, std::string("jacobian evaluation failed: ") + e.what(), t, y);
            }
            if (jac.rows() != n || jac.cols() != n || !jac.allFinite())
                d.fail(IntegratorError::Kind::NonFinite, "jacobian is not a finite n x n matrix", t, y);
        }
        for (Index j = 0; j < n && !cfg.jacobian; ++j) {
            ypert = y;
            const double dj = sqrt_eps * (1.0 + std::fabs(y[j]));
            ypert[j] += dj;
            const double step_j = ypert[j] - y[j];
            eval_state(t, ypert, fpert);
            jac.col(j) = (fpert - f0) / step_j;
        }
        ++d.stats.jacobian_evals;
        jac_fresh = true;
        have_jac = true;
        factored_h = -1.0;
    };

    auto factor = [&](double h) {
        if (h == factored_h)
            return;
        lu.compute(Mat::Identity(n, n) - (dcoef * h) * jac);
        ++d.stats.factorizations;
        factored_h = h;
    };

    // Simplified Newton for z - d h f(ts, z) = rc. Returns false on divergence.
    auto newton = [&](double ts, double h, const Vec& rc, Vec& z) {
        double prev = 0.0;
        for (int it = 0; it < kMaxNewton; ++it) {
            try {
                eval(ts, z, fz);
            } catch (const ModelError&) {
                return false;
            } catch (const EvaluationError&) {
                return false;
            }
            g = z - (dcoef * h) * fz - rc;
            delta = -lu.solve(g);
            z += delta;
            ++d.stats.newton_iters;
            // Weighted by the step's starting state: weights taken from z
            // would let a runaway iterate pass as converged.
            const double dnorm =
                K.scaled_error_max(view(delta), view(y), view(y), cfg.abs_tol, cfg.rel_tol);
            if (!std::isfinite(dnorm) || !z.allFinite())
                return false;
            if (it == 0) {
                // A small first update alone proves nothing when the
                // iteration matrix is far off; trust it only with a known
                // good rate, inflated so that it is re-measured now and then.
                const double rate = std::pow(std::max(newton_rate, 1e-3), 0.8);
                if (rate < 1.0 && dnorm * rate / (1.0 - rate) <= kNewtonTol) {
                    newton_rate = rate;
                    return true;
                }
            } else {
                const double rate = dnorm / prev;
                newton_rate = rate;
                if (rate > 0.9)
                    return false;
                if (dnorm <= kNewtonTol || dnorm * rate / (1.0 - rate) <= kNewtonTol)
                    return true;
            }
            prev = dnorm;
        }
        return false;
    };

    eval_state(t, y, f0);
    double h = d.initial_step();

    while (t < t1) {
        if (d.stats.accepted_steps + d.stats.rejected_steps >= cfg.max_steps)
            d.fail(IntegratorError::Kind::StepBudget, "integrate_stiff: step budget exhausted", t, y);

        const PlannedStep step = plan(d, t, h);
        if (step.h <= d.h_min) {
            t = step.target;
            if (step.target != t1)
                d.clock.advance();
            continue;
        }
        const double hs = step.h;

        if (!have_jac)
            compute_jacobian();
        factor(hs);

        // Trapezoidal stage to t + gamma h.
        rc1 = y + (dcoef * hs) * f0;
        z1 = y + (gamma * hs) * f0;
        bool ok = newton(t + gamma * hs, hs, rc1, z1);
        if (ok) {
            // BDF2 stage to t + h.
            rc2 = alpha2 * z1 - beta2 * y;
            z2 = y + (z1 - y) / gamma;
            ok = newton(t + hs, hs, rc2, z2);
        }
        if (!ok) {
            if (!jac_fresh) {
                compute_jacobian();
                continue;
            }
            ++d.stats.rejected_steps;
            just_rejected = true;
            h = 0.25 * hs;
            if (h < d.h_min)
                d.fail(IntegratorError::Kind::NewtonFailure,
                       "integrate_stiff: Newton iteration failed to converge", t, y);
            continue;
        }

        f1 = (z1 - rc1) / (dcoef * hs);
        f2 = (z2 - rc2) / (dcoef * hs);
        est = hs * (e0 * f0 + e1 * f1 + e2 * f2);
        // Filter the estimate through the iteration matrix so that stiff
        // components are not overestimated.
        const Vec err = lu.solve(est);
        double errnorm = K.scaled_error_max(view(err), view(y), view(z2), cfg.abs_tol, cfg.rel_tol);
        if (!z2.allFinite())
            errnorm = std::numeric_limits<double>::infinity();

        StepOutcome outcome = control_step(hs, errnorm, 1.0 / 3.0);
        if (!outcome.accepted) {
            ++d.stats.rejected_steps;
            just_rejected = true;
            h = outcome.next_step;
            if (h < d.h_min)
                d.fail(std::isfinite(errnorm) ? IntegratorError::Kind::StepUnderflow
                                              : IntegratorError::Kind::NonFinite,
                       "integrate_stiff: step size underflow", t, y);
            continue;
        }

        // No growth straight after a rejection: the step that just failed
        // would otherwise be retried at once.
        if (just_rejected)
            outcome.next_step = std::min(outcome.next_step, hs);
        just_rejected = false;
        ++d.stats.accepted_steps;
        t = step.landing ? step.target : t + hs;
        y = z2;
        if (project)
            project(y);
        jac_fresh = false;
        h = d.clamp_step(step.landing ? std::max(outcome.next_step, h) : outcome.next_step);
        if (step.landing && step.target != t1)
            d.clock.advance();

        if (observer && observer({t, y, step.landing}) == ObserverAction::Stop)
            return {t, y, d.stats, true};
        if (t < t1)
            eval_state(t, y, f0);
    }
    return {t, y, d.stats, false};
}

IntegrationResult integrate(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                            const IntegratorConfig& cfg, const Observer& observer,
                            const Projector& project) {
    if (cfg.kind == IntegratorKind::StiffImplicit)
        return integrate_stiff(rhs, y0, t0, t1, cfg, observer, project);
    return integrate_explicit(rhs, y0, t0, t1, cfg, observer, project);
}

} // namespace boxflow::ode
