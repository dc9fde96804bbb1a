#pragma once

#include "boxflow/core.hpp"
#include "boxflow/report.hpp"

namespace boxflow {

/// Integrate the dynamic optimization equation selected by opts.method from
/// theta0 over [0, opts.horizon] and report the final point.
///
/// An infeasible theta0 is clamped onto the box and flagged in the report.
/// Integrator failures surface as SolveError carrying the partial trajectory.
SolveReport solve_to_stationarity(const BoxProblem& problem, const GainMatrix& gain,
                                  const SolveOptions& opts, const Vec& theta0);

} // namespace boxflow

namespace boxflow {

struct TrajectoryComparison {
    // max over the samples of `a` (up to the shorter run's end) of
    // |theta_a - theta_b|_inf against the nearest sample of `b` in tau.
    double max_difference = 0.0;
    double final_difference = 0.0;
    std::size_t points = 0;
};

TrajectoryComparison compare_trajectories(const SolveReport& a, const SolveReport& b);

} // namespace boxflow
