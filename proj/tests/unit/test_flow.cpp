#include <gtest/gtest.h>

#include <random>

#include <Eigen/QR>

#include <boxflow/active_set.hpp>
#include <boxflow/activeset_qp.hpp>
#include <boxflow/errors.hpp>
#include <boxflow/flow.hpp>
#include <boxflow/problems.hpp>

#include "random.hpp"

using namespace boxflow;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const GainMatrix K1 = GainMatrix::diagonal(v2(0.5, 1.0));

ActiveBoundSet lower_only(std::vector<Index> idx) { return {std::move(idx), {}}; }

} // namespace

TEST(Unconstrained, ZeroGradient) {
    EXPECT_EQ(rhs_unconstrained(v2(1, 1), Vec::Zero(2), K1), Vec::Zero(2));
}

TEST(Unconstrained, IdentityGain) {
    const Vec g = v2(3, -7);
    EXPECT_EQ(rhs_unconstrained(v2(0, 0), g, GainMatrix::identity(2)), -g);
}

TEST(Unconstrained, FirstExampleStart) {
    const auto p = example1();
    const Vec th = v2(5, 5);
    const Vec g = p.gradient(th);
    EXPECT_EQ(g, v2(12, 6));
    EXPECT_EQ(rhs_unconstrained(th, g, K1), v2(-6, -6));
}

TEST(Limited, EquilibriumAtFirstExampleOptimum) {
    const auto p = example1();
    const Vec th = v2(0, 2);
    EXPECT_EQ(rhs_limited(th, p.gradient(th), K1, p, LimiterMode::exact(), 1e-10), Vec::Zero(2));
    EXPECT_EQ(rhs_limited(th, p.gradient(th), K1, p, LimiterMode::softened(), 1e-10), Vec::Zero(2));
}

TEST(Limited, InteriorMatchesUnconstrained) {
    const auto p = example1();
    const Vec th = v2(3, 4);
    const Vec g = p.gradient(th);
    EXPECT_EQ(rhs_limited(th, g, K1, p, LimiterMode::exact(), 1e-10), rhs_unconstrained(th, g, K1));
    EXPECT_EQ(rhs_limited(th, g, K1, p, LimiterMode::softened(), 1e-10), rhs_unconstrained(th, g, K1));
}

TEST(Limited, SoftenedPullsBackOvershoot) {
    const auto p = example1();
    const Vec th = v2(5, 10.01);
    const Vec g = v2(0, -1); // x_2 = +1 pushes outward
    const Vec u = rhs_limited(th, g, K1, p, LimiterMode::softened(1.0, 1.0), 1e-10);
    EXPECT_NEAR(u[1], -0.01, 1e-12);
}

TEST(Limited, SoftenedDegeneratesToExactOnTheBound) {
    std::mt19937_64 rng(5);
    const auto p = example1();
    for (int k = 0; k < 200; ++k) {
        const Vec th = testsupport::random_feasible(rng, p);
        const Vec g = testsupport::uniform_vec(rng, 2, -5, 5);
        EXPECT_EQ(rhs_limited(th, g, K1, p, LimiterMode::softened(2.0, 3.0), 1e-10),
                  rhs_limited(th, g, K1, p, LimiterMode::exact(), 1e-10));
    }
}

TEST(Limited, RejectsDenseGainUnlessAllowed) {
    const auto p = example1();
    Mat m(2, 2);
    m << 0.5, 0.2, 0.2, 1;
    const auto K = GainMatrix::dense(m);
    EXPECT_THROW(rhs_limited(v2(1, 1), v2(1, 1), K, p, LimiterMode::exact(), 1e-10), MethodContractError);
    EXPECT_NO_THROW(rhs_limited(v2(1, 1), v2(1, 1), K, p, LimiterMode::exact(), 1e-10, true));
}

TEST(Projected, EmptyActiveIsUnconstrained) {
    const Vec g = v2(2, 6);
    EXPECT_EQ(rhs_projected(v2(1, 1), g, K1, {}), v2(-1, -6));
}

TEST(Projected, SelectionStructure) {
    const SelectionMatrixView h({{0, 1}, {2, -1}}, 4);
    Mat expected = Mat::Zero(4, 4);
    expected(0, 0) = 1;
    expected(2, 2) = 1;
    EXPECT_EQ(h.pseudo_inverse() * h.matrix(), expected);
    const ActiveBoundSet set{{2}, {0}};
    const Vec u = rhs_projected(Vec::Zero(4), Vec::Ones(4), GainMatrix::identity(4), set);
    EXPECT_EQ(u, (Vec(4) << 0, -1, 0, -1).finished());
}

TEST(Projected, FirstExampleOnLowerBound) {
    EXPECT_EQ(rhs_projected(v2(0, 5), v2(2, 6), K1, lower_only({0})), v2(0, -6));
}

TEST(Projected, RejectsConflictingRows) {
    EXPECT_THROW(SelectionMatrixView({{0, 1}, {0, -1}}, 2), ArgumentError);
    EXPECT_THROW(SelectionMatrixView({{1, 1}, {1, 1}}, 2), ArgumentError);
    EXPECT_THROW(rhs_projected(v2(0, 0), v2(1, 1), K1, ActiveBoundSet{{0}, {0}}), ArgumentError);
}

TEST(General, InteriorIsUnconstrained) {
    const auto p = example1();
    const auto r = rhs_general(v2(3, 3), v2(8, 2), K1, p, 1e-10);
    EXPECT_TRUE(r.fpdop.i_p.empty());
    EXPECT_EQ(r.u, v2(-4, -2));
}

TEST(General, FirstExampleOnLowerBound) {
    const auto p = example1();
    const auto r = rhs_general(v2(0, 5), v2(2, 6), K1, p, 1e-10);
    ASSERT_EQ(r.fpdop.pi.size(), 1);
    EXPECT_DOUBLE_EQ(r.fpdop.pi[0], 2.0);
    EXPECT_EQ(r.u, v2(0, -6));
}

TEST(General, MatchesExactLimiterWithDiagonalGain) {
    std::mt19937_64 rng(17);
    const BoxProblem problems[] = {example1(), example2(0.0), example2(0.1), genwood(8)};
    for (const auto& p : problems)
        for (int k = 0; k < 100; ++k) {
            const Vec th = testsupport::random_feasible(rng, p);
            const Vec g = p.gradient(th);
            const auto K = testsupport::random_diagonal_gain(rng, p.dim());
            const Vec a = rhs_limited(th, g, K, p, LimiterMode::exact(), 1e-10);
            const auto gen = rhs_general(th, g, K, p, 1e-10);
            const Vec c = rhs_projected(th, g, K, gen.fpdop.i_p);
            EXPECT_LE((a - gen.u).lpNorm<Eigen::Infinity>(), 1e-12);
            EXPECT_LE((a - c).lpNorm<Eigen::Infinity>(), 1e-12);
        }
}

TEST(Descent, ZeroGradient) {
    EXPECT_EQ(descent_rate(Vec::Zero(2), K1, {}), 0.0);
}

TEST(Descent, DenseCounterexampleIncreases) {
    Mat m(2, 2);
    m << 0.2, -1, -1, 10;
    const ActiveBoundSet upper2{{}, {1}};
    EXPECT_DOUBLE_EQ(descent_rate(v2(1, 2), GainMatrix::dense(m), upper2), 1.8);
}

TEST(Descent, NonpositiveForDiagonalGains) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int k = 0; k < 500; ++k) {
        const Index n = 1 + k % 6;
        ActiveBoundSet set;
        for (Index i = 0; i < n; ++i) {
            const int c = pick(rng);
            if (c == 0)
                set.lower.push_back(i);
            else if (c == 1)
                set.upper.push_back(i);
        }
        const Vec g = testsupport::uniform_vec(rng, n, -10, 10);
        EXPECT_LE(descent_rate(g, testsupport::random_diagonal_gain(rng, n), set), 0.0);
    }
}

TEST(Selection, IdentitiesHoldExactly) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int k = 0; k < 100; ++k) {
        const Index n = 1 + k % 7;
        ActiveBoundSet set;
        for (Index i = 0; i < n; ++i) {
            const int c = pick(rng);
            if (c == 0)
                set.lower.push_back(i);
            else if (c == 1)
                set.upper.push_back(i);
        }
        const auto h = SelectionMatrixView::from(set, n);
        const Mat H = h.matrix();
        EXPECT_EQ(H * H.transpose(), Mat::Identity(h.rows(), h.rows()));
        EXPECT_EQ(h.pseudo_inverse(), H.transpose());
    }
}

TEST(Selection, ScaledProjectorIdentity) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int k = 0; k < 100; ++k) {
        const Index n = 1 + k % 6;
        ActiveBoundSet set;
        for (Index i = 0; i < n; ++i) {
            const int c = pick(rng);
            if (c == 0)
                set.lower.push_back(i);
            else if (c == 1)
                set.upper.push_back(i);
        }
        const Mat H = SelectionMatrixView::from(set, n).matrix();
        const Vec d = testsupport::uniform_vec(rng, n, 0.1, 5.0);
        const Mat Kh = d.cwiseSqrt().asDiagonal();
        const Mat Khi = d.cwiseSqrt().cwiseInverse().asDiagonal();
        const Mat A = H * Kh;
        const Mat Ap = A.rows() ? Mat(A.completeOrthogonalDecomposition().pseudoInverse()) : Mat(n, 0);
        const Mat lhs = Kh * (Mat::Identity(n, n) - Ap * A) * Khi;
        const Mat rhs = Mat::Identity(n, n) - H.transpose() * H;
        EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}
