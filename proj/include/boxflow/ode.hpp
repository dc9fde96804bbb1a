#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "boxflow/core.hpp"
#include "boxflow/errors.hpp"

namespace boxflow::ode {

struct IntegratorConfig {
    IntegratorKind kind = IntegratorKind::ExplicitRK45;
    double rel_tol = 1e-3;
    double abs_tol = 1e-6;
    // Defaults to 1% of the span.
    std::optional<double> initial_step;
    std::optional<double> max_step;
    std::size_t max_steps = 1'000'000;
    // If positive, steps are shortened to land exactly on t0 + k * output_interval.
    double output_interval = 0.0;
    // Stiff integrator only: df/dy at (t, y), replacing the forward-difference
    // Jacobian. Useful for piecewise-smooth fields, where differencing across a
    // switching surface gives meaningless entries.
    std::function<void(double t, const Vec& y, Mat& jac)> jacobian;

    void validate() const;
};

/// Verdict of the step-size controller for one attempted step.
struct StepOutcome {
    bool accepted = false;
    double error_estimate = 0.0;
    double next_step = 0.0;
};

/// Standard controller: accept when err <= 1 and propose
/// h * min(5, max(0.2, 0.9 * err^(-exponent))).
StepOutcome control_step(double step, double error_estimate, double exponent);

struct IntegrationStats {
    std::size_t rhs_evals = 0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t newton_iters = 0;
    std::size_t jacobian_evals = 0;
    std::size_t factorizations = 0;
};

struct IntegrationResult {
    double t = 0.0;
    Vec y;
    IntegrationStats stats;
    bool stopped_by_observer = false;
};

// dy/dt = f(t, y)
using RhsFn = std::function<void(double t, const Vec& y, Vec& dydt)>;

struct StepInfo {
    double t;
    const Vec& y;
    // True when t is one of the output points requested by output_interval
    // or the end of the span.
    bool output_point;
};

enum class ObserverAction { Continue, Stop };
using Observer = std::function<ObserverAction(const StepInfo&)>;

// Applied in place to every accepted state (e.g. clamping onto a box).
using Projector = std::function<void(Vec& y)>;

class IntegratorError : public Error {
public:
    enum class Kind { StepUnderflow, StepBudget, NewtonFailure, NonFinite };

    IntegratorError(Kind kind, const std::string& what, double t, Vec y, IntegrationStats stats)
        : Error(what), kind_(kind), t_(t), y_(std::move(y)), stats_(stats) {}

    Kind kind() const { return kind_; }
    double t() const { return t_; }
    const Vec& y() const { return y_; }
    const IntegrationStats& stats() const { return stats_; }

private:
    Kind kind_;
    double t_;
    Vec y_;
    IntegrationStats stats_;
};

/// Dormand-Prince 5(4) with local extrapolation and FSAL.
IntegrationResult integrate_explicit(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                                     const IntegratorConfig& cfg, const Observer& observer = {},
                                     const Projector& project = {});

/// TR-BDF2 (trapezoidal stage then BDF2 stage sharing one iteration matrix),
/// L-stable and second order. Simplified Newton on a Jacobian (forward
/// differences unless cfg.jacobian is set) that is kept until the iteration
/// stops converging.
IntegrationResult integrate_stiff(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                                  const IntegratorConfig& cfg, const Observer& observer = {},
                                  const Projector& project = {});

/// Dispatch on cfg.kind.
IntegrationResult integrate(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                            const IntegratorConfig& cfg, const Observer& observer = {},
                            const Projector& project = {});

} // namespace boxflow::ode
