#pragma once

#include <cstddef>

#include "boxflow/active_set.hpp"
#include "boxflow/core.hpp"

namespace boxflow {

/// Bounds active at theta: lower when theta_i <= lower_i + tol, upper when
/// theta_i >= upper_i - tol. Throws FeasibilityError if theta is outside the
/// box by more than tol.
ActiveBoundSet activated_set(const Vec& theta, const BoxProblem& problem, double active_tol);

/// Feedback QP of the general dynamic method: choose the control u that
/// minimizes J3 = 1/2 grad'u + 1/4 u'K^{-1}u subject to g_i'u <= 0 for the
/// activated bounds (g_i = +e_i for an upper bound, -e_i for a lower bound).
struct FpdopProblem {
    Vec grad;
    GainMatrix gain;
    ActiveBoundSet candidate;

    FpdopProblem(Vec grad, GainMatrix gain, ActiveBoundSet candidate);

    /// grad' u
    double descent_term(const Vec& u) const;
    /// 1/2 u' K^{-1} u
    double control_cost(const Vec& u) const;
    /// 1/2 descent_term + 1/2 control_cost
    double objective(const Vec& u) const;
};

struct FpdopSolution {
    Vec u;
    // Optimal-active constraints of the QP.
    ActiveBoundSet i_p;
    // Multipliers on i_p, ordered like SelectionMatrixView::from(i_p).
    Vec pi;
    // Same multipliers embedded in the 2n constraint layout
    // [upper bounds 0..n-1; lower bounds 0..n-1], zero off i_p.
    Vec pi_full;
    std::size_t iterations = 0;
};

/// pi = -(h K h')^{-1} h K grad for the selection matrix h of `working`.
/// With a diagonal K this is -sign_i * grad_i row by row.
Vec equality_multipliers(const Vec& grad, const GainMatrix& gain, const ActiveBoundSet& working);

/// Primal active-set solve starting from the working set W = candidate (or
/// `hint` restricted to the candidate, when that start is feasible).
///
/// Throws NonTerminationError if a working set repeats or more than
/// 2|candidate| + 2 working-set changes are needed.
FpdopSolution solve_fpdop(const FpdopProblem& problem, const ActiveBoundSet* hint = nullptr);

} // namespace boxflow
