#pragma once

#include <cstddef>

#include "boxflow/core.hpp"
#include "boxflow/report.hpp"

namespace boxflow {

struct PgdOptions {
    std::size_t max_iters = 100'000;
    double armijo_c = 1e-4;
    double backtrack_ratio = 0.5;
    double initial_step = 1.0;
    double stationarity_tol = 1e-8;
    double active_tol = 1e-10;
    double degeneracy_tol = 1e-6;

    void validate() const;
};

/// theta+ = P(theta - alpha grad) with alpha from Armijo backtracking along
/// the projection arc, restarted from initial_step each iteration.
///
/// Throws SolveError (with the iterates so far) if the step underflows before
/// a sufficient decrease is found.
SolveReport projected_gradient_descent(const BoxProblem& problem, const Vec& theta0,
                                       const PgdOptions& opts);

} // namespace boxflow
