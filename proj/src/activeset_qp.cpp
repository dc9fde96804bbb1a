#include "boxflow/activeset_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include <Eigen/Cholesky>

#include "boxflow/errors.hpp"

namespace boxflow {

namespace {

// Working-set member in the same order SelectionMatrixView::from uses.
struct Row {
    Index index;
    int sign;
    auto operator<=>(const Row&) const = default;
};

ActiveBoundSet to_set(const std::vector<Row>& rows) {
    ActiveBoundSet s;
    for (const auto& r : rows)
        (r.sign > 0 ? s.upper : s.lower).push_back(r.index);
    std::sort(s.lower.begin(), s.lower.end());
    std::sort(s.upper.begin(), s.upper.end());
    return s;
}

std::vector<Row> to_rows(const ActiveBoundSet& s) {
    std::vector<Row> rows;
    for (Index i : s.upper)
        rows.push_back({i, 1});
    for (Index i : s.lower)
        rows.push_back({i, -1});
    return rows;
}

struct EqpSolution {
    Vec u;
    Vec pi;
};

// Equality-constrained subproblem on `working`.
EqpSolution solve_eqp(const Vec& grad, const GainMatrix& gain, const ActiveBoundSet& working) {
    EqpSolution s;
    s.pi = equality_multipliers(grad, gain, working);
    const auto rows = to_rows(working);
    Vec rhs = grad;
    for (std::size_t r = 0; r < rows.size(); ++r)
        rhs[rows[r].index] += rows[r].sign * s.pi[static_cast<Index>(r)];
    s.u = -gain.apply(rhs);
    // The constrained components are zero in exact arithmetic; pin them.
    for (const auto& r : rows)
        s.u[r.index] = 0.0;
    return s;
}

} // namespace

ActiveBoundSet activated_set(const Vec& theta, const BoxProblem& problem, double active_tol) {
    if (theta.size() != problem.dim())
        throw ArgumentError("activated_set: dimension mismatch");
    const auto feas = check_feasible(theta, problem, active_tol);
    if (!feas.feasible) {
        std::ostringstream os;
        os << "activated_set: point violates the box by " << feas.worst_violation;
        throw FeasibilityError(os.str());
    }
    ActiveBoundSet s;
    const Vec& lo = problem.lower();
    const Vec& hi = problem.upper();
    for (Index i = 0; i < theta.size(); ++i) {
        const bool at_lo = theta[i] <= lo[i] + active_tol;
        const bool at_hi = theta[i] >= hi[i] - active_tol;
        if (at_lo && at_hi) {
            // Only possible when the box is narrower than 2 tol; pick the nearer side.
            (theta[i] - lo[i] <= hi[i] - theta[i] ? s.lower : s.upper).push_back(i);
        } else if (at_lo) {
            s.lower.push_back(i);
        } else if (at_hi) {
            s.upper.push_back(i);
        }
    }
    return s;
}

FpdopProblem::FpdopProblem(Vec grad_, GainMatrix gain_, ActiveBoundSet candidate_)
    : grad(std::move(grad_)), gain(std::move(gain_)), candidate(std::move(candidate_)) {
    if (grad.size() != gain.dim())
        throw ArgumentError("FpdopProblem: gradient and gain dimensions differ");
    candidate.validate(grad.size());
}

double FpdopProblem::descent_term(const Vec& u) const { return grad.dot(u); }

double FpdopProblem::control_cost(const Vec& u) const { return 0.5 * u.dot(gain.solve(u)); }

double FpdopProblem::objective(const Vec& u) const {
    return 0.5 * descent_term(u) + 0.5 * control_cost(u);
}

Vec equality_multipliers(const Vec& grad, const GainMatrix& gain, const ActiveBoundSet& working) {
    const Index n = grad.size();
    if (gain.dim() != n)
        throw ArgumentError("equality_multipliers: dimension mismatch");
    const auto rows = to_rows(working);
    working.validate(n);
    const Index m = static_cast<Index>(rows.size());
    Vec pi(m);
    if (m == 0)
        return pi;

    if (gain.is_diagonal()) {
        for (Index r = 0; r < m; ++r)
            pi[r] = -rows[static_cast<std::size_t>(r)].sign * grad[rows[static_cast<std::size_t>(r)].index];
        return pi;
    }

    const Mat k = gain.to_dense();
    Mat hkh(m, m);
    Vec hkg(m);
    const Vec kg = k * grad;
    for (Index a = 0; a < m; ++a) {
        const auto& ra = rows[static_cast<std::size_t>(a)];
        hkg[a] = ra.sign * kg[ra.index];
        for (Index b = 0; b < m; ++b) {
            const auto& rb = rows[static_cast<std::size_t>(b)];
            hkh(a, b) = ra.sign * rb.sign * k(ra.index, rb.index);
        }
    }
    Eigen::LLT<Mat> llt(hkh);
    if (llt.info() != Eigen::Success)
        throw Error("equality_multipliers: h K h' is singular");
    pi = -llt.solve(hkg);
    return pi;
}

FpdopSolution solve_fpdop(const FpdopProblem& problem, const ActiveBoundSet* hint) {
    const Index n = problem.grad.size();
    const auto candidate_rows = to_rows(problem.candidate);
    const std::size_t budget = 2 * candidate_rows.size() + 2;

    auto constraint_value = [](const Row& r, const Vec& u) { return r.sign * u[r.index]; };

    // Thresholds relative to the size of the unconstrained control.
    const double scale = std::max(1.0, problem.gain.apply(problem.grad).lpNorm<Eigen::Infinity>());
    const double feas_tol = 1e-14 * scale;
    const double pi_tol = 1e-14 * std::max(1.0, problem.grad.lpNorm<Eigen::Infinity>());

    std::vector<Row> working = candidate_rows;
    EqpSolution eqp;
    bool started = false;
    if (hint) {
        std::vector<Row> warm;
        for (const auto& r : to_rows(*hint))
            if (std::find(candidate_rows.begin(), candidate_rows.end(), r) != candidate_rows.end())
                warm.push_back(r);
        EqpSolution trial = solve_eqp(problem.grad, problem.gain, to_set(warm));
        bool feasible = true;
        for (const auto& r : candidate_rows)
            if (constraint_value(r, trial.u) > feas_tol)
                feasible = false;
        if (feasible) {
            working = std::move(warm);
            eqp = std::move(trial);
            started = true;
        }
    }
    if (!started)
        eqp = solve_eqp(problem.grad, problem.gain, to_set(working));

    Vec u = eqp.u;
    std::set<std::vector<Row>> visited;
    std::size_t changes = 0;

    for (;;) {
        std::vector<Row> key = working;
        std::sort(key.begin(), key.end());

        const Vec step = eqp.u - u;
        if (step.lpNorm<Eigen::Infinity>() <= feas_tol) {
            // At the minimizer of the current equality subproblem.
            if (!visited.insert(key).second)
                throw NonTerminationError("solve_fpdop: working set repeated");
            Index worst = -1;
            double most_negative = -pi_tol;
            const auto ordered = to_rows(to_set(working));
            for (Index r = 0; r < eqp.pi.size(); ++r)
                if (eqp.pi[r] < most_negative) {
                    most_negative = eqp.pi[r];
                    worst = r;
                }
            if (worst < 0) {
                FpdopSolution sol;
                sol.u = eqp.u;
                sol.i_p = to_set(working);
                sol.pi = eqp.pi;
                sol.pi_full = Vec::Zero(2 * n);
                for (std::size_t r = 0; r < ordered.size(); ++r) {
                    const auto& row = ordered[r];
                    const Index slot = row.sign > 0 ? row.index : n + row.index;
                    sol.pi_full[slot] = eqp.pi[static_cast<Index>(r)];
                }
                sol.iterations = changes;
                return sol;
            }
            const Row drop = ordered[static_cast<std::size_t>(worst)];
            working.erase(std::find(working.begin(), working.end(), drop));
        } else {
            // Move toward the subproblem minimizer, stopping at the first
            // candidate bound that would be violated.
            double alpha = 1.0;
            const Row* blocking = nullptr;
            for (const auto& r : candidate_rows) {
                if (std::find(working.begin(), working.end(), r) != working.end())
                    continue;
                const double slope = constraint_value(r, step);
                if (slope > feas_tol) {
                    const double ratio = -constraint_value(r, u) / slope;
                    if (ratio < alpha) {
                        alpha = std::max(ratio, 0.0);
                        blocking = &r;
                    }
                }
            }
            u += alpha * step;
            if (!blocking) {
                u = eqp.u;
                continue;
            }
            u[blocking->index] = 0.0;
            working.push_back(*blocking);
        }
        if (++changes > budget)
            throw NonTerminationError("solve_fpdop: exceeded " + std::to_string(budget) +
                                      " working-set changes");
        eqp = solve_eqp(problem.grad, problem.gain, to_set(working));
    }
}

} // namespace boxflow
