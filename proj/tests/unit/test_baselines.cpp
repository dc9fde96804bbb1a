#include <gtest/gtest.h>

#include <boxflow/baselines.hpp>
#include <boxflow/errors.hpp>
#include <boxflow/problems.hpp>
#include <boxflow/solver.hpp>

using namespace boxflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

} // namespace

TEST(Pgd, FirstExample) {
    const auto r = projected_gradient_descent(example1(), v2(5, 5), PgdOptions{});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.final_theta[0], 0.0, 1e-8);
    EXPECT_NEAR(r.final_theta[1], 2.0, 1e-8);
    EXPECT_EQ(r.method, Method::ProjectedGradientBaseline);
}

TEST(Pgd, ShiftedSecondExample) {
    const auto r = projected_gradient_descent(example2(0.1), v2(0.5, 0.5), PgdOptions{});
    EXPECT_NEAR(r.final_theta[0], 0.1, 1e-6);
    EXPECT_NEAR(r.final_theta[1], 0.1, 1e-6);
}

TEST(Pgd, MonotoneAndFeasible) {
    const auto p = genwood(8);
    const auto r = projected_gradient_descent(p, Vec::Constant(8, 2.1), PgdOptions{});
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        EXPECT_TRUE(check_feasible(r.samples[i].theta, p, 0.0).feasible);
        if (i)
            EXPECT_LE(r.samples[i].f, r.samples[i - 1].f * (1 + 1e-14) + 1e-14);
    }
    EXPECT_TRUE(r.converged);
}

TEST(Pgd, ReachableThroughTheSolver) {
    SolveOptions o;
    o.method = Method::ProjectedGradientBaseline;
    const auto r = solve_to_stationarity(example1(), GainMatrix::identity(2), o, v2(5, 5));
    EXPECT_TRUE(r.converged);
}

TEST(Pgd, OptionValidation) {
    PgdOptions o;
    o.backtrack_ratio = 1.0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = PgdOptions{};
    o.max_iters = 0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = PgdOptions{};
    o.initial_step = -1;
    EXPECT_THROW(projected_gradient_descent(example1(), v2(1, 1), o), ArgumentError);
}
