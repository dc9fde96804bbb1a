#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <boxflow/flow.hpp>
#include <boxflow/ode.hpp>
#include <boxflow/problems.hpp>

using namespace boxflow;
using namespace boxflow::ode;

namespace {

void decay(double, const Vec& y, Vec& dy) { dy = -y; }

void stiff_cos(double t, const Vec& y, Vec& dy) {
    dy.resize(1);
    dy[0] = -1000.0 * (y[0] - std::cos(t));
}

// Classic RK4 with a fixed, very small step: the reference for the stiff
// test problem.
double rk4_reference(double t1, double h) {
    double y = 0.0;
    const auto f = [](double t, double v) { return -1000.0 * (v - std::cos(t)); };
    const auto n = static_cast<long>(std::llround(t1 / h));
    for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        const double k1 = f(t, y);
        const double k2 = f(t + h / 2, y + h / 2 * k1);
        const double k3 = f(t + h / 2, y + h / 2 * k2);
        const double k4 = f(t + h, y + h * k3);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
}

IntegratorConfig config(IntegratorKind kind, double rtol = 1e-3, double atol = 1e-6) {
    IntegratorConfig c;
    c.kind = kind;
    c.rel_tol = rtol;
    c.abs_tol = atol;
    return c;
}

} // namespace

TEST(Controller, AcceptsAndClamps) {
    auto o = control_step(1.0, 0.5, 0.2);
    EXPECT_TRUE(o.accepted);
    EXPECT_NEAR(o.next_step, 0.9 * std::pow(0.5, -0.2), 1e-15);
    EXPECT_DOUBLE_EQ(control_step(1.0, 0.0, 0.2).next_step, 5.0);
    EXPECT_DOUBLE_EQ(control_step(1.0, 1e-30, 0.2).next_step, 5.0);
    o = control_step(1.0, 1e6, 0.2);
    EXPECT_FALSE(o.accepted);
    EXPECT_DOUBLE_EQ(o.next_step, 0.2);
    EXPECT_DOUBLE_EQ(control_step(1.0, INFINITY, 0.2).next_step, 0.2);
    // Barely rejected: never proposes the same step again.
    EXPECT_LE(control_step(1.0, 1.0001, 0.2).next_step, 0.9);
}

TEST(Config, Validation) {
    IntegratorConfig c;
    c.rel_tol = 0;
    EXPECT_THROW(c.validate(), ArgumentError);
    c = IntegratorConfig{};
    c.max_steps = 0;
    EXPECT_THROW(c.validate(), ArgumentError);
    EXPECT_THROW(integrate_explicit(decay, Vec::Ones(1), 1.0, 1.0, IntegratorConfig{}), ArgumentError);
}

TEST(Explicit, LinearTestEquation) {
    const auto r = integrate_explicit(decay, Vec::Ones(1), 0.0, 1.0, config(IntegratorKind::ExplicitRK45));
    EXPECT_DOUBLE_EQ(r.t, 1.0);
    EXPECT_NEAR(r.y[0], std::exp(-1.0), 1e-4);
}

TEST(Stiff, LinearTestEquation) {
    const auto r = integrate_stiff(decay, Vec::Ones(1), 0.0, 1.0, config(IntegratorKind::StiffImplicit));
    EXPECT_DOUBLE_EQ(r.t, 1.0);
    EXPECT_NEAR(r.y[0], std::exp(-1.0), 1e-3);
}

TEST(Explicit, ConvergenceOrder) {
    // Harmonic oscillator, smooth and interior; error against steps taken.
    const auto osc = [](double, const Vec& y, Vec& dy) {
        dy.resize(2);
        dy[0] = y[1];
        dy[1] = -y[0];
    };
    const Vec y0 = (Vec(2) << 1.0, 0.0).finished();
    std::vector<double> logn, loge;
    for (double tol : {1e-5, 1e-6, 1e-7, 1e-8, 1e-9}) {
        const auto r = integrate_explicit(osc, y0, 0.0, 20.0, config(IntegratorKind::ExplicitRK45, tol, tol));
        const double err = std::hypot(r.y[0] - std::cos(20.0), r.y[1] + std::sin(20.0));
        logn.push_back(std::log(static_cast<double>(r.stats.accepted_steps)));
        loge.push_back(std::log(err));
    }
    // Least-squares slope of log(error) against log(steps).
    const double n = static_cast<double>(logn.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logn.size(); ++i) {
        sx += logn[i];
        sy += loge[i];
        sxx += logn[i] * logn[i];
        sxy += logn[i] * loge[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_LE(slope, -4.0);
}

TEST(Explicit, FirstExampleClosedForm) {
    const auto p = example1();
    const auto K = GainMatrix::diagonal((Vec(2) << 0.5, 1.0).finished());
    const auto rhs = [&](double, const Vec& y, Vec& dy) {
        const Vec th = project_to_box(y, p);
        dy = rhs_limited(th, p.gradient(th), K, p, LimiterMode::exact(), 1e-10);
    };
    auto cfg = config(IntegratorKind::ExplicitRK45, 1e-8, 1e-10);
    cfg.output_interval = 0.25;
    std::vector<std::pair<double, Vec>> seen;
    const auto r = integrate_explicit(
        rhs, (Vec(2) << 5.0, 5.0).finished(), 0.0, 4.0, cfg,
        [&](const StepInfo& s) {
            if (s.output_point)
                seen.emplace_back(s.t, s.y);
            return ObserverAction::Continue;
        },
        [&](Vec& y) { y = project_to_box(y, p); });
    ASSERT_FALSE(seen.empty());
    const double hit = std::log(6.0);
    for (const auto& [t, y] : seen) {
        EXPECT_NEAR(y[1], 2.0 + 3.0 * std::exp(-2.0 * t), 1e-3) << "t=" << t;
        if (t < hit - 1e-3)
            EXPECT_NEAR(y[0], -1.0 + 6.0 * std::exp(-t), 1e-3) << "t=" << t;
        if (t > hit + 1e-3)
            EXPECT_EQ(y[0], 0.0) << "t=" << t;
    }
    EXPECT_NEAR(seen[3].second[1], 2.40601, 1e-3); // t = 1
    EXPECT_EQ(r.y[0], 0.0);
}

TEST(Stiff, TracksCosineWithFarFewerSteps) {
    const auto ref = rk4_reference(1.0, 1e-5);
    ASSERT_NEAR(ref, std::cos(1.0), 1e-2);
    const auto cfg_e = config(IntegratorKind::ExplicitRK45);
    const auto cfg_s = config(IntegratorKind::StiffImplicit);
    const auto e = integrate_explicit(stiff_cos, Vec::Zero(1), 0.0, 1.0, cfg_e);
    const auto s = integrate_stiff(stiff_cos, Vec::Zero(1), 0.0, 1.0, cfg_s);
    EXPECT_NEAR(s.y[0], ref, 1e-2);
    EXPECT_NEAR(e.y[0], ref, 1e-2);
    EXPECT_GE(e.stats.accepted_steps, 10 * s.stats.accepted_steps);
}

TEST(Integrators, LandOnOutputPoints) {
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit}) {
        auto cfg = config(kind);
        cfg.output_interval = 0.1;
        std::vector<double> ts;
        integrate(decay, Vec::Ones(1), 0.0, 1.0, cfg, [&](const StepInfo& s) {
            if (s.output_point)
                ts.push_back(s.t);
            return ObserverAction::Continue;
        });
        ASSERT_EQ(ts.size(), 10u);
        for (std::size_t k = 0; k < ts.size(); ++k)
            EXPECT_NEAR(ts[k], 0.1 * static_cast<double>(k + 1), 1e-12);
        EXPECT_EQ(ts.back(), 1.0);
    }
}

TEST(Integrators, ObserverCanStop) {
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit}) {
        int calls = 0;
        const auto r = integrate(decay, Vec::Ones(1), 0.0, 10.0, config(kind), [&](const StepInfo&) {
            return ++calls == 3 ? ObserverAction::Stop : ObserverAction::Continue;
        });
        EXPECT_TRUE(r.stopped_by_observer);
        EXPECT_EQ(calls, 3);
        EXPECT_LT(r.t, 10.0);
    }
}

TEST(Integrators, StepBudget) {
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit}) {
        auto cfg = config(kind, 1e-10, 1e-12);
        cfg.max_steps = 5;
        try {
            integrate(decay, Vec::Ones(1), 0.0, 100.0, cfg);
            FAIL() << "expected a budget error";
        } catch (const IntegratorError& e) {
            EXPECT_EQ(e.kind(), IntegratorError::Kind::StepBudget);
            EXPECT_EQ(e.y().size(), 1);
        }
    }
}

TEST(Integrators, NonFiniteRhsFails) {
    const auto blowup = [](double, const Vec& y, Vec& dy) { dy = Vec::Constant(y.size(), NAN); };
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit})
        EXPECT_THROW(integrate(blowup, Vec::Ones(1), 0.0, 1.0, config(kind)), IntegratorError);
}

TEST(Integrators, ModelErrorAtStateEndsRun) {
    const auto bad = [](double, const Vec&, Vec&) { throw ModelError("no"); };
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit}) {
        try {
            integrate(bad, Vec::Ones(1), 0.0, 1.0, config(kind));
            FAIL();
        } catch (const IntegratorError& e) {
            EXPECT_EQ(e.kind(), IntegratorError::Kind::NonFinite);
        }
    }
}

TEST(Integrators, TrialFailureShortensStep) {
    // The model refuses states far from the true solution; an oversized first
    // step produces such trial states and must be retried shorter.
    const auto guarded = [](double, const Vec& y, Vec& dy) {
        if (std::fabs(y[0]) > 2.0)
            throw ModelError("out of range");
        dy = -50.0 * y;
    };
    for (auto kind : {IntegratorKind::ExplicitRK45, IntegratorKind::StiffImplicit}) {
        auto cfg = config(kind);
        cfg.initial_step = 1.0;
        const auto r = integrate(guarded, Vec::Ones(1), 0.0, 1.0, cfg);
        EXPECT_NEAR(r.y[0], 0.0, 1e-4);
        EXPECT_GE(r.stats.rejected_steps, 1u);
    }
}

TEST(Stiff, SuppliedJacobianIsUsed) {
    auto cfg = config(IntegratorKind::StiffImplicit);
    int calls = 0;
    cfg.jacobian = [&](double, const Vec&, Mat& jac) {
        ++calls;
        jac = -Mat::Identity(1, 1);
    };
    const auto r = integrate_stiff(decay, Vec::Ones(1), 0.0, 1.0, cfg);
    EXPECT_GT(calls, 0);
    EXPECT_EQ(r.stats.jacobian_evals, static_cast<std::size_t>(calls));
    EXPECT_NEAR(r.y[0], std::exp(-1.0), 1e-3);
    cfg.jacobian = [](double, const Vec&, Mat& jac) { jac = Mat::Constant(1, 1, NAN); };
    EXPECT_THROW(integrate_stiff(decay, Vec::Ones(1), 0.0, 1.0, cfg), IntegratorError);
}
