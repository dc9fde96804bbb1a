#pragma once

#include "boxflow/active_set.hpp"
#include "boxflow/core.hpp"

namespace boxflow {

/// First-order optimality diagnostics at a point.
///
/// Multipliers use the layout of g(theta) = [theta - upper; lower - theta]:
/// entries 0..n-1 belong to the upper bounds, n..2n-1 to the lower bounds.
struct KKTReport {
    Vec residual;
    double residual_norm = 0.0;
    Vec multipliers;
    ActiveBoundSet active;
    // Active bounds whose multiplier magnitude is below the degeneracy tolerance.
    ActiveBoundSet degenerate;
    bool strict_complementarity = true;
    // False if an active multiplier is below -degeneracy_tol.
    bool multipliers_nonnegative = true;
};

/// r_i = grad_i inside the box, min(grad_i, 0) on a lower bound,
/// max(grad_i, 0) on an upper bound.
Vec projected_residual(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                       double active_tol);

/// Bound multipliers implied by stationarity: -grad_i on an active upper bound,
/// +grad_i on an active lower bound, zero elsewhere.
Vec recover_multipliers(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                        double active_tol);

KKTReport kkt_report(const Vec& theta, const BoxProblem& problem, double active_tol,
                     double degeneracy_tol = 1e-6);

/// Same as above with a precomputed gradient.
KKTReport kkt_report(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                     double active_tol, double degeneracy_tol = 1e-6);

} // namespace boxflow
