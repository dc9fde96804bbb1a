#include "boxflow/flow.hpp"

#include "boxflow/errors.hpp"
#include "boxflow/simd/kernels.hpp"
#include "detail.hpp"

namespace boxflow {

using detail::view;

namespace {

void require_same(Index a, Index b, const char* what) {
    if (a != b)
        throw ArgumentError(std::string(what) + ": dimension mismatch");
}

} // namespace

Vec rhs_unconstrained(const Vec& theta, const Vec& grad, const GainMatrix& gain) {
    require_same(theta.size(), grad.size(), "rhs_unconstrained");
    require_same(grad.size(), gain.dim(), "rhs_unconstrained");
    if (!gain.is_diagonal())
        return -gain.apply(grad);
    Vec u(grad.size());
    simd::active().neg_scale(view(gain.diagonal_entries()), view(grad), view(u));
    return u;
}

Vec rhs_limited(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                const BoxProblem& problem, const LimiterMode& mode, double active_tol,
                bool allow_dense) {
    require_same(theta.size(), grad.size(), "rhs_limited");
    require_same(theta.size(), problem.dim(), "rhs_limited");
    require_same(grad.size(), gain.dim(), "rhs_limited");
    if (!gain.is_diagonal() && !allow_dense)
        throw MethodContractError(
            "rhs_limited: the limited-integrator flow requires a diagonal gain");

    const Vec x = rhs_unconstrained(theta, grad, gain);
    Vec u(x.size());
    const auto& k = simd::active();
    if (mode.kind == LimiterMode::Kind::Exact) {
        k.limit_exact(view(theta), view(x), view(problem.lower()), view(problem.upper()),
                      active_tol, view(u));
    } else {
        k.limit_softened(view(theta), view(x), view(problem.lower()), view(problem.upper()),
                         active_tol, mode.k_upper, mode.k_lower, view(u));
    }
    return u;
}

Vec rhs_projected(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                  const ActiveBoundSet& active) {
    require_same(theta.size(), grad.size(), "rhs_projected");
    require_same(grad.size(), gain.dim(), "rhs_projected");
    if (!gain.is_diagonal())
        throw MethodContractError("rhs_projected: requires a diagonal gain");
    const auto h = SelectionMatrixView::from(active, grad.size());
    return h.project_out(rhs_unconstrained(theta, grad, gain));
}

GeneralRhs rhs_general(const Vec& theta, const Vec& grad, const GainMatrix& gain,
                       const BoxProblem& problem, double active_tol, const ActiveBoundSet* hint) {
    require_same(theta.size(), grad.size(), "rhs_general");
    require_same(grad.size(), gain.dim(), "rhs_general");
    FpdopProblem qp(grad, gain, activated_set(theta, problem, active_tol));
    GeneralRhs out{Vec(), solve_fpdop(qp, hint)};
    out.u = out.fpdop.u;
    return out;
}

double descent_rate(const Vec& grad, const GainMatrix& gain, const ActiveBoundSet& active) {
    require_same(grad.size(), gain.dim(), "descent_rate");
    const auto h = SelectionMatrixView::from(active, grad.size());
    return -grad.dot(h.project_out(gain.apply(grad)));
}

} // namespace boxflow
