#include "boxflow/kkt.hpp"

#include <cmath>
#include <sstream>

#include "boxflow/activeset_qp.hpp"
#include "boxflow/errors.hpp"
#include "boxflow/simd/kernels.hpp"
#include "detail.hpp"

namespace boxflow {

using detail::view;

namespace {

void require_feasible(const Vec& theta, const Vec& grad, const BoxProblem& problem, double tol) {
    if (theta.size() != problem.dim() || grad.size() != problem.dim())
        throw ArgumentError("kkt: dimension mismatch");
    const auto feas = check_feasible(theta, problem, tol);
    if (!feas.feasible) {
        std::ostringstream os;
        os << "kkt: point violates the box by " << feas.worst_violation;
        throw FeasibilityError(os.str());
    }
}

} // namespace

Vec projected_residual(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                       double active_tol) {
    require_feasible(theta, grad, problem, active_tol);
    Vec r(theta.size());
    simd::active().projected_residual(view(theta), view(grad), view(problem.lower()),
                                      view(problem.upper()), active_tol, view(r));
    return r;
}

Vec recover_multipliers(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                        double active_tol) {
    require_feasible(theta, grad, problem, active_tol);
    const Index n = theta.size();
    const auto active = activated_set(theta, problem, active_tol);
    Vec pi = Vec::Zero(2 * n);
    for (Index i : active.upper)
        pi[i] = -grad[i];
    for (Index i : active.lower)
        pi[n + i] = grad[i];
    return pi;
}

KKTReport kkt_report(const Vec& theta, const BoxProblem& problem, double active_tol,
                     double degeneracy_tol) {
    return kkt_report(theta, problem.gradient(theta), problem, active_tol, degeneracy_tol);
}

KKTReport kkt_report(const Vec& theta, const Vec& grad, const BoxProblem& problem,
                     double active_tol, double degeneracy_tol) {
    const Index n = theta.size();
    KKTReport rep;
    rep.residual = projected_residual(theta, grad, problem, active_tol);
    rep.residual_norm = rep.residual.size() ? rep.residual.lpNorm<Eigen::Infinity>() : 0.0;
    rep.multipliers = recover_multipliers(theta, grad, problem, active_tol);
    rep.active = activated_set(theta, problem, active_tol);
    for (Index i : rep.active.upper) {
        const double m = rep.multipliers[i];
        if (std::fabs(m) < degeneracy_tol)
            rep.degenerate.upper.push_back(i);
        if (m < -degeneracy_tol)
            rep.multipliers_nonnegative = false;
    }
    for (Index i : rep.active.lower) {
        const double m = rep.multipliers[n + i];
        if (std::fabs(m) < degeneracy_tol)
            rep.degenerate.lower.push_back(i);
        if (m < -degeneracy_tol)
            rep.multipliers_nonnegative = false;
    }
    rep.strict_complementarity = rep.degenerate.empty();
    return rep;
}

} // namespace boxflow
