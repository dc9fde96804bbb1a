#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "boxflow/core.hpp"
#include "boxflow/errors.hpp"
#include "boxflow/kkt.hpp"

namespace boxflow {

struct TrajectorySample {
    double tau = 0.0;
    Vec theta;
    double f = 0.0;
    double residual = 0.0;
};

struct SolveStats {
    std::size_t rhs_evals = 0;
    std::size_t qp_solves = 0;
    std::size_t newton_iters = 0;
    std::size_t jacobian_evals = 0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t objective_evals = 0;
    std::size_t gradient_evals = 0;
    double wall_time = 0.0;
    // Largest excursion of the raw integrator state outside the box.
    double max_bound_violation = 0.0;
};

struct SolveReport {
    std::string problem;
    Method method = Method::UnconstrainedLike;
    Vec final_theta;
    double final_f = 0.0;
    double final_tau = 0.0;
    KKTReport kkt;
    std::vector<TrajectorySample> samples;
    SolveStats stats;
    bool converged = false;
    // The initial point was outside the box and had to be clamped.
    bool initial_point_clamped = false;
};

/// A solve that failed part-way. Carries whatever was computed before the
/// failure.
class SolveError : public Error {
public:
    SolveError(const std::string& what, SolveReport partial)
        : Error(what), partial_(std::move(partial)) {}

    const SolveReport& partial() const { return partial_; }

private:
    SolveReport partial_;
};

} // namespace boxflow
