#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <boxflow/activeset_qp.hpp>
#include <boxflow/errors.hpp>
#include <boxflow/kkt.hpp>
#include <boxflow/problems.hpp>

#include "random.hpp"

using namespace boxflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

} // namespace

TEST(Residual, Branches) {
    const auto p = example1();
    // interior: the raw gradient
    EXPECT_EQ(projected_residual(v2(3, 3), v2(8, 2), p, 1e-10), v2(8, 2));
    // lower bound with the gradient pushing out is satisfied
    EXPECT_EQ(projected_residual(v2(0, 3), v2(2, 2), p, 1e-10), v2(0, 2));
    EXPECT_EQ(projected_residual(v2(0, 3), v2(-2, 2), p, 1e-10), v2(-2, 2));
    // upper bound
    EXPECT_EQ(projected_residual(v2(10, 10), v2(-1, 1), p, 1e-10), v2(0, 1));
}

TEST(Residual, InfeasiblePointThrows) {
    EXPECT_THROW(projected_residual(v2(-1, 3), v2(0, 0), example1(), 1e-10), FeasibilityError);
}

TEST(Report, FirstExampleOptimum) {
    const auto r = kkt_report(v2(0, 2), example1(), 1e-10);
    EXPECT_EQ(r.residual_norm, 0.0);
    EXPECT_EQ(r.multipliers, (Vec(4) << 0, 0, 2, 0).finished());
    EXPECT_TRUE(r.strict_complementarity);
    EXPECT_TRUE(r.multipliers_nonnegative);
}

TEST(Report, DegenerateSecondExample) {
    const auto r = kkt_report(v2(0, 0), example2(0.0), 1e-10);
    EXPECT_EQ(r.residual_norm, 0.0);
    EXPECT_FALSE(r.strict_complementarity);
    EXPECT_EQ(r.degenerate.lower, std::vector<Index>{1});
    EXPECT_DOUBLE_EQ(r.multipliers[2], 1.0);
}

TEST(Report, ShiftedSecondExampleStrict) {
    const auto r = kkt_report(v2(0.1, 0.1), example2(0.1), 1e-10);
    EXPECT_EQ(r.residual_norm, 0.0);
    EXPECT_TRUE(r.strict_complementarity);
    EXPECT_NEAR(r.multipliers[2], 0.88, 1e-12);
    EXPECT_NEAR(r.multipliers[3], 0.09, 1e-12);
}

TEST(Report, WrongSignedMultiplierFlagged) {
    const auto r = kkt_report(v2(0, 2), v2(-1, 0), example1(), 1e-10);
    EXPECT_FALSE(r.multipliers_nonnegative);
    EXPECT_GT(r.residual_norm, 0.0);
}

TEST(Report, ZeroResidualIffKkt) {
    // With the multipliers read off the gradient, stationarity holds by
    // construction; a zero residual must coincide with sign-feasible
    // multipliers and zero free gradient.
    std::mt19937_64 rng(31);
    const auto p = example1();
    for (int k = 0; k < 500; ++k) {
        const Vec th = testsupport::random_feasible(rng, p);
        Vec g = testsupport::uniform_vec(rng, 2, -2, 2);
        for (Index i = 0; i < 2; ++i)
            if (k % 3 == 0)
                g[i] = 0.0;
        const auto r = kkt_report(th, g, p, 1e-10, 0.0);
        const auto act = activated_set(th, p, 1e-10);
        bool kkt = r.multipliers_nonnegative;
        for (Index i = 0; i < 2; ++i) {
            const bool on = std::count(act.lower.begin(), act.lower.end(), i) ||
                            std::count(act.upper.begin(), act.upper.end(), i);
            if (!on && g[i] != 0.0)
                kkt = false;
        }
        EXPECT_EQ(r.residual_norm == 0.0, kkt) << "instance " << k;
    }
}
