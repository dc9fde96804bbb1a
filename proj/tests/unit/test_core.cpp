#include <gtest/gtest.h>

#include <random>

#include <boxflow/core.hpp>
#include <boxflow/errors.hpp>
#include <boxflow/problems.hpp>

#include "random.hpp"

using namespace boxflow;

namespace {

BoxProblem square(double lo, double hi) {
    return BoxProblem(
        "square", [](const Vec& t) { return t.squaredNorm(); }, [](const Vec& t) -> Vec { return 2.0 * t; },
        Vec::Constant(2, lo), Vec::Constant(2, hi));
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

} // namespace

TEST(Project, InteriorPointUnchanged) {
    EXPECT_EQ(project_to_box(v2(5, 5), square(0, 10)), v2(5, 5));
}

TEST(Project, ClampsComponentwise) {
    EXPECT_EQ(project_to_box(v2(-1, 12), square(0, 10)), v2(0, 10));
}

TEST(Project, OptimumOfFirstExampleIsFixed) {
    EXPECT_EQ(project_to_box(v2(0, 2), example1()), v2(0, 2));
}

TEST(Project, IdempotentAndFeasible) {
    std::mt19937_64 rng(11);
    const auto p = square(-1.5, 2.0);
    for (int k = 0; k < 200; ++k) {
        const Vec x = testsupport::uniform_vec(rng, 2, -10, 10);
        const Vec once = project_to_box(x, p);
        EXPECT_EQ(project_to_box(once, p), once);
        EXPECT_TRUE(check_feasible(once, p, 0.0).feasible);
    }
}

TEST(Project, InfiniteBoundsAreNoOps) {
    BoxProblem p("free", [](const Vec&) { return 0.0; }, [](const Vec& t) -> Vec { return Vec::Zero(t.size()); },
                 v2(-kInf, 0.0), v2(kInf, kInf));
    EXPECT_EQ(project_to_box(v2(-1e300, -3), p), v2(-1e300, 0));
}

TEST(Project, DimensionMismatch) {
    EXPECT_THROW(project_to_box(Vec::Zero(3), square(0, 1)), ArgumentError);
    EXPECT_THROW(check_feasible(Vec::Zero(3), square(0, 1), 0.0), ArgumentError);
}

TEST(Feasible, Interior) {
    const auto c = check_feasible(v2(5, 5), square(0, 10), 1e-8);
    EXPECT_TRUE(c.feasible);
    EXPECT_EQ(c.worst_violation, 0.0);
}

TEST(Feasible, WithinTolerance) {
    const auto c = check_feasible(v2(10 + 1e-9, 5), square(0, 10), 1e-8);
    EXPECT_TRUE(c.feasible);
    EXPECT_NEAR(c.worst_violation, 1e-9, 1e-15);
}

TEST(Feasible, Outside) {
    const auto c = check_feasible(v2(11, 5), square(0, 10), 1e-8);
    EXPECT_FALSE(c.feasible);
    EXPECT_DOUBLE_EQ(c.worst_violation, 1.0);
}

TEST(BoxProblemCtor, RejectsEqualOrCrossedBounds) {
    EXPECT_THROW(square(1, 1), ArgumentError);
    EXPECT_THROW(square(2, 1), ArgumentError);
    EXPECT_THROW(BoxProblem("x", [](const Vec&) { return 0.0; }, [](const Vec& t) -> Vec { return t; },
                            Vec::Zero(2), Vec::Ones(3)),
                 ArgumentError);
}

TEST(Gain, DenseRejectsIndefinite) {
    Mat m(2, 2);
    m << 1, 2, 2, 1;
    EXPECT_THROW(GainMatrix::dense(m), ArgumentError);
}

TEST(Gain, DenseRejectsAsymmetric) {
    Mat m(2, 2);
    m << 1, 0.1, 0.2, 1;
    EXPECT_THROW(GainMatrix::dense(m), ArgumentError);
}

TEST(Gain, DiagonalRejectsNonpositive) {
    EXPECT_THROW(GainMatrix::diagonal(v2(1, 0)), ArgumentError);
    EXPECT_THROW(GainMatrix::diagonal(v2(-1, 1)), ArgumentError);
}

TEST(Gain, ApplyAndSolveAreInverse) {
    Mat m(2, 2);
    m << 0.5, 0.2, 0.2, 1;
    const auto K = GainMatrix::dense(m);
    const Vec v = v2(3, -4);
    EXPECT_TRUE(K.solve(K.apply(v)).isApprox(v, 1e-14));
    EXPECT_THROW(K.diagonal_entries(), MethodContractError);
    const auto D = GainMatrix::diagonal(v2(0.5, 1));
    EXPECT_EQ(D.apply(v), v2(1.5, -4));
    EXPECT_EQ(D.solve(v), v2(6, -4));
}

TEST(Options, Validation) {
    SolveOptions o;
    EXPECT_NO_THROW(o.validate());
    o.rel_tol = 0;
    EXPECT_THROW(o.validate(), ArgumentError);
    o = SolveOptions{};
    o.horizon = -1;
    EXPECT_THROW(o.validate(), ArgumentError);
    EXPECT_THROW(LimiterMode::softened(0.0, 1.0), ArgumentError);
}
