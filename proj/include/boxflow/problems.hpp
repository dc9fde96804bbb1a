#pragma once

#include <optional>
#include <string>

#include "boxflow/core.hpp"

namespace boxflow {

/// f = (t1 + 1)^2 + (t2 - 2)^2 on [0, 10]^2. Optimum [0, 2].
BoxProblem example1();

/// f = -(t1^2 - t2^2)/2 - t1^2 t2 + t1 on [lower, 1]^2.
/// With lower = 0 the optimum [0, 0] is degenerate in t2.
BoxProblem example2(double lower = 0.0);

/// Generalized Wood function on [1.1, 2.1]^n, n a positive multiple of 4.
BoxProblem genwood(Index n);

/// Contribution of one 4-variable block (without the leading constant 1).
double genwood_block(double a, double b, double c, double d);

/// A benchmark problem together with the setup it is usually solved with.
struct ProblemSpec {
    std::string id;
    BoxProblem problem;
    Vec default_init;
    GainMatrix default_gain;
    double default_horizon;
    IntegratorKind default_integrator;
    std::optional<Vec> known_optimum;
};

/// Resolve "example1", "example2", "example2:<lower>", "genwood:<n>".
/// Throws ArgumentError for anything else.
ProblemSpec make_problem(const std::string& id);

struct GradientCheck {
    double max_rel_error = 0.0;
    bool pass = false;
};

/// Central differences with step h * (1 + |theta_i|) against the analytic
/// gradient; error per component relative to max(1, |grad_i|). Passes at
/// 1e-5. h defaults to the cube root of machine epsilon.
GradientCheck fd_check_gradient(const BoxProblem& problem, const Vec& theta,
                                std::optional<double> h = std::nullopt);

} // namespace boxflow
