#pragma once

// Right-hand sides of the dynamic optimization equation d(theta)/dtau = u.

#include "boxflow/active_set.hpp"
#include "boxflow/activeset_qp.hpp"
#include "boxflow/core.hpp"

namespace boxflow {

/// Unconstrained gradient flow: u = -K grad.
Vec rhs_unconstrained(const Vec& theta, const Vec& grad, const GainMatrix& gain);

/// Limited-integrator flow. With x = -K grad, component i is frozen
/// (Exact) or pulled back toward the bound (Softened) when theta_i sits on a
/// bound and x_i pushes outward; otherwise u_i = x_i.
///
/// Requires a diagonal gain; a dense gain raises MethodContractError unless
/// `allow_dense` is set.
Vec rhs_limited(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                const BoxProblem& problem, const LimiterMode& mode, double active_tol,
                bool allow_dense = false);

/// u = -(I - pinv(h) h) K grad for the selection matrix h of `active`.
Vec rhs_projected(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                  const ActiveBoundSet& active);

struct GeneralRhs {
    Vec u;
    FpdopSolution fpdop;
};

/// General dynamic method: solve the feedback QP at theta and return
/// u = -K (grad + g' pi).
GeneralRhs rhs_general(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                       const BoxProblem& problem, double active_tol,
                       const ActiveBoundSet* hint = nullptr);

/// df/dtau = -grad' (I - pinv(h) h) K grad. Nonpositive for any diagonal K;
/// a dense K can make it positive.
double descent_rate(const Vec& grad, const GainMatrix& gain, const ActiveBoundSet& active);

} // namespace boxflow
