#include "boxflow/pde_ident.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include <Eigen/QR>

#include "boxflow/errors.hpp"
#include "boxflow/solver.hpp"
#include "boxflow/simd/kernels.hpp"
#include "detail.hpp"

namespace boxflow::pde {

using detail::view;

void MaterialParams::validate() const {
    if (!(rho > 0.0) || !(cp > 0.0) || !(L > 0.0))
        throw ArgumentError("MaterialParams: rho, cp and L must be positive");
}

ConductivityModel::ConductivityModel(Vec nodes, Vec theta)
    : nodes_(std::move(nodes)), theta_(std::move(theta)) {
    const Index n = nodes_.size();
    if (n < 1 || theta_.size() != n)
        throw ArgumentError("ConductivityModel: nodes and theta must be nonempty and equal length");
    for (Index i = 1; i < n; ++i)
        if (!(nodes_[i] > nodes_[i - 1]))
            throw ArgumentError("ConductivityModel: nodes must be strictly increasing");
    if (!theta_.allFinite())
        throw ArgumentError("ConductivityModel: theta must be finite");

    values_.resize(n);
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        sum += theta_[i];
        values_[i] = sum;
    }
    weights_.resize(n);
    for (Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (Index j = 0; j < n; ++j)
            if (j != i)
                p *= nodes_[i] - nodes_[j];
        weights_[i] = 1.0 / p;
    }
}

double ConductivityModel::eval(double T) const {
    Vec t(1), out(1);
    t[0] = T;
    eval(t, out);
    return out[0];
}

void ConductivityModel::eval(const Vec& T, Vec& out) const {
    out.resize(T.size());
    simd::active().barycentric(view(nodes_), view(weights_), view(values_), kFloor, view(T),
                               view(out));
}

Vec equispaced_nodes(Index n, double lo, double hi) {
    if (n < 2 || !(hi > lo))
        throw ArgumentError("equispaced_nodes: need n >= 2 and hi > lo");
    Vec out(n);
    for (Index i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

Vec increments_from_values(const Vec& node_values) {
    Vec theta(node_values.size());
    for (Index i = 0; i < node_values.size(); ++i)
        theta[i] = i == 0 ? node_values[0] : node_values[i] - node_values[i - 1];
    return theta;
}

Index GridSpec::steps() const {
    return static_cast<Index>(std::llround(t_end / dt));
}

void GridSpec::validate() const {
    if (nx < 3)
        throw ArgumentError("GridSpec: nx must be at least 3");
    if (!(dt > 0.0) || !(t_end > 0.0))
        throw ArgumentError("GridSpec: dt and t_end must be positive");
    if (std::fabs(static_cast<double>(steps()) * dt - t_end) > 1e-9 * t_end)
        throw ArgumentError("GridSpec: t_end must be a multiple of dt");
}

double BoundaryConditions::left(double t) const {
    const double v = left_start + left_rate * t;
    return left_rate >= 0.0 ? std::min(v, left_final) : std::max(v, left_final);
}

double TemperatureField::at(Index k, double x_pos) const {
    const Index nx = x.size();
    const double dx = x[1] - x[0];
    const double s = std::clamp((x_pos - x[0]) / dx, 0.0, static_cast<double>(nx - 1));
    const Index i = std::min<Index>(static_cast<Index>(s), nx - 2);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * T(k, i) + w * T(k, i + 1);
}

TemperatureField forward_solve(const MaterialParams& mat, const ConductivityModel& model,
                               const GridSpec& grid, const BoundaryConditions& bc) {
    mat.validate();
    grid.validate();
    constexpr double kPicardTol = 1e-8;
    constexpr int kMaxSweeps = 20;

    const Index nx = grid.nx;
    const Index nt = grid.steps();
    const double dx = mat.L / static_cast<double>(nx - 1);
    const double r = grid.dt / (mat.rho * mat.cp * dx * dx);

    TemperatureField field;
    field.x.resize(nx);
    for (Index i = 0; i < nx; ++i)
        field.x[i] = mat.L * static_cast<double>(i) / static_cast<double>(nx - 1);
    field.t.resize(nt + 1);
    for (Index k = 0; k <= nt; ++k)
        field.t[k] = grid.dt * static_cast<double>(k);
    field.T.resize(nt + 1, nx);

    Vec cur = Vec::Constant(nx, bc.t_init);
    cur[0] = bc.left(0.0);
    cur[nx - 1] = bc.right;
    field.T.row(0) = cur.transpose();
    Vec prev = cur;
    Vec prev2 = cur;

    // face[i] is r times the conductivity on the face between nodes i and i+1;
    // inv and c hold the Thomas elimination of the interior rows.
    Vec guess(nx), next(nx), k(nx), face(nx - 1), inv(nx), c(nx);

    // One lagged-conductivity sweep: next solves the linear step with k taken
    // at g. Returns the largest interior change.
    auto sweep_once = [&](const Vec& g) {
        model.eval(g, k);
        const double* kp = k.data();
        double* f = face.data();
        bool positive = true;
        for (Index i = 0; i < nx; ++i)
            positive &= kp[i] > 0.0;
        if (!positive)
            throw ModelError("forward_solve: conductivity is not positive");
        for (Index i = 0; i + 1 < nx; ++i)
            f[i] = 0.5 * r * (kp[i] + kp[i + 1]);

        // Row i: -f[i-1] T[i-1] + (1 + f[i-1] + f[i]) T[i] - f[i] T[i+1] = cur[i].
        const double* u = cur.data();
        const double* gp = g.data();
        double* out = next.data();
        double* iv = inv.data();
        double* cc = c.data();
        iv[1] = 1.0 / (1.0 + f[0] + f[1]);
        cc[1] = (u[1] + f[0] * gp[0]) * iv[1];
        for (Index i = 2; i < nx - 1; ++i) {
            iv[i] = 1.0 / (1.0 + f[i - 1] + f[i] - f[i - 1] * f[i - 1] * iv[i - 1]);
            cc[i] = (u[i] + f[i - 1] * cc[i - 1]) * iv[i];
        }
        cc[nx - 2] += f[nx - 2] * gp[nx - 1] * iv[nx - 2];

        out[0] = gp[0];
        out[nx - 1] = gp[nx - 1];
        out[nx - 2] = cc[nx - 2];
        double change = std::fabs(out[nx - 2] - gp[nx - 2]);
        for (Index i = nx - 3; i >= 1; --i) {
            out[i] = cc[i] + f[i] * iv[i] * out[i + 1];
            change = std::max(change, std::fabs(out[i] - gp[i]));
        }
        return change;
    };

    // Plain sweeps first. With a strong contrast in k (a floored interpolant
    // next to a moderate one) the lagged map can cycle; the step then starts
    // over from the predictor with Anderson mixing of the last sweeps. Both
    // stop at the same fixed point, so the result does not depend on which
    // one ran beyond the sweep tolerance.
    constexpr Index kDepth = 5;
    Mat dF(nx, kDepth), dG(nx, kDepth);
    Vec f_prev(nx), g_prev(nx), start(nx);
    auto settle = [&](Vec& g, bool mixing) {
        double last_change = 0.0;
        int stalled = 0;
        Index stored = 0;
        for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
            const double change = sweep_once(g);
            if (!std::isfinite(change))
                return false;
            if (change <= kPicardTol) {
                g.swap(next);
                return true;
            }
            if (!mixing) {
                // Linear contraction: the distance left to the fixed point is
                // about change * rate / (1 - rate).
                if (sweep > 0) {
                    const double rate = change / last_change;
                    if (rate < 0.5 && change * rate / (1.0 - rate) <= kPicardTol) {
                        g.swap(next);
                        return true;
                    }
                    stalled = rate >= 0.95 ? stalled + 1 : 0;
                    if (stalled == 3)
                        return false;
                }
                last_change = change;
                g.swap(next);
                continue;
            }
            Vec fk = next - g;
            if (sweep > 0) {
                const Index col = (sweep - 1) % kDepth;
                dF.col(col) = fk - f_prev;
                dG.col(col) = next - g_prev;
                stored = std::min<Index>(stored + 1, kDepth);
            }
            f_prev = fk;
            g_prev = next;
            if (stored == 0) {
                g = next;
                continue;
            }
            const Vec gamma = dF.leftCols(stored).colPivHouseholderQr().solve(fk);
            g = next - dG.leftCols(stored) * gamma;
        }
        return false;
    };

    for (Index step = 1; step <= nt; ++step) {
        const double t = field.t[step];
        if (step > 2)
            guess = 3.0 * (cur - prev) + prev2;
        else if (step > 1)
            guess = 2.0 * cur - prev;
        else
            guess = cur;
        guess[0] = bc.left(t);
        guess[nx - 1] = bc.right;

        start = guess;
        if (!settle(guess, false)) {
            guess = start;
            if (!settle(guess, true)) {
                std::ostringstream os;
                os << "forward_solve: Picard sweeps did not settle at t = " << t;
                throw ModelError(os.str());
            }
        }
        prev2.swap(prev);
        prev.swap(cur);
        cur = guess;
        field.T.row(step) = cur.transpose();
    }
    return field;
}

MeasurementSet::MeasurementSet(std::vector<double> positions, std::vector<double> weights,
                               Vec times, Mat values, double noise_sigma, std::uint64_t seed)
    : positions_(std::move(positions)), weights_(std::move(weights)), times_(std::move(times)),
      values_(std::move(values)), noise_sigma_(noise_sigma), seed_(seed) {
    if (positions_.empty() || positions_.size() != weights_.size())
        throw ArgumentError("MeasurementSet: need one weight per position");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0))
            throw ArgumentError("MeasurementSet: weights must be positive");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw ArgumentError("MeasurementSet: weights must sum to 1");
    if (times_.size() < 2)
        throw ArgumentError("MeasurementSet: need at least two measurement times");
    for (Index k = 1; k < times_.size(); ++k)
        if (!(times_[k] > times_[k - 1]))
            throw ArgumentError("MeasurementSet: times must be increasing");
    if (values_.rows() != static_cast<Index>(positions_.size()) || values_.cols() != times_.size())
        throw ArgumentError("MeasurementSet: values must be sensors x times");
    if (!(noise_sigma_ >= 0.0))
        throw ArgumentError("MeasurementSet: noise_sigma must be nonnegative");
}

MeasurementSet synthesize_measurements(const TemperatureField& field,
                                       const std::vector<double>& positions,
                                       const std::vector<double>& weights, double sigma,
                                       std::uint64_t seed) {
    const double L = field.x[field.x.size() - 1];
    for (double p : positions)
        if (!(p > 0.0 && p < L))
            throw ArgumentError("synthesize_measurements: sensor positions must lie inside (0, L)");
    if (!(sigma >= 0.0))
        throw ArgumentError("synthesize_measurements: sigma must be nonnegative");

    const Index nt = field.t.size();
    const auto ns = static_cast<Index>(positions.size());
    Mat values(ns, nt);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Index k = 0; k < nt; ++k) {
        const double v = sigma > 0.0 ? sigma * noise(rng) : 0.0;
        for (Index i = 0; i < ns; ++i)
            values(i, k) = field.at(k, positions[static_cast<std::size_t>(i)]) + v;
    }
    return MeasurementSet(positions, weights, field.t, std::move(values), sigma, seed);
}

double objective_eval(const Vec& theta, const IdentContext& ctx) {
    if ((theta.array() < 0.0).any())
        throw FeasibilityError("objective_eval: theta must be nonnegative");
    const auto field =
        forward_solve(ctx.material, ConductivityModel(ctx.nodes, theta), ctx.grid, ctx.bc);
    const auto& meas = ctx.measurements;
    const Index nt = meas.times().size();
    if (field.t.size() != nt)
        throw ArgumentError("objective_eval: measurement times do not match the grid");

    const auto& pos = meas.positions();
    const auto& w = meas.weights();
    auto mismatch = [&](Index k) {
        double s = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const double d = field.at(k, pos[i]) - meas.values()(static_cast<Index>(i), k);
            s += w[i] * d * d;
        }
        return s;
    };
    double J = 0.0;
    double left = mismatch(0);
    for (Index k = 1; k < nt; ++k) {
        const double right = mismatch(k);
        J += 0.5 * (meas.times()[k] - meas.times()[k - 1]) * (left + right);
        left = right;
    }
    return J;
}

Vec fd_gradient(const Vec& theta, const std::function<double(const Vec&)>& J) {
    if ((theta.array() < 0.0).any())
        throw FeasibilityError("fd_gradient: theta must be nonnegative");
    Vec grad(theta.size());
    Vec t = theta;
    double j0 = 0.0;
    bool have_j0 = false;
    for (Index j = 0; j < theta.size(); ++j) {
        const double h = 1e-4 * (1.0 + std::fabs(theta[j]));
        t[j] = theta[j] + h;
        const double jp = J(t);
        if (theta[j] - h < 0.0) {
            if (!have_j0) {
                j0 = J(theta);
                have_j0 = true;
            }
            grad[j] = (jp - j0) / h;
        } else {
            t[j] = theta[j] - h;
            grad[j] = (jp - J(t)) / (2.0 * h);
        }
        t[j] = theta[j];
    }
    return grad;
}

Vec fd_gradient(const Vec& theta, const IdentContext& ctx) {
    return fd_gradient(theta, [&](const Vec& t) { return objective_eval(t, ctx); });
}

void IdentConfig::validate() const {
    material.validate();
    grid.validate();
    if (nodes.size() < 2 || truth_values.size() != nodes.size() || theta0.size() != nodes.size())
        throw ArgumentError("IdentConfig: nodes, truth_values and theta0 must have equal length");
    if (!(gain > 0.0) || !(horizon > 0.0) || !(rel_tol > 0.0) || !(abs_tol > 0.0) ||
        !(stationarity_tol > 0.0))
        throw ArgumentError("IdentConfig: gain, horizon and tolerances must be positive");
    if (!(noise_sigma >= 0.0))
        throw ArgumentError("IdentConfig: noise_sigma must be nonnegative");
}

IdentContext make_context(const IdentConfig& cfg) {
    cfg.validate();
    std::vector<double> positions = cfg.positions;
    if (positions.empty())
        positions = {cfg.material.L / 3.0, 2.0 * cfg.material.L / 3.0};
    const ConductivityModel truth(cfg.nodes, increments_from_values(cfg.truth_values));
    const auto field = forward_solve(cfg.material, truth, cfg.grid, cfg.bc);
    auto meas = synthesize_measurements(field, positions, cfg.weights, cfg.noise_sigma, cfg.seed);
    return IdentContext{cfg.material, cfg.nodes, cfg.grid, cfg.bc, std::move(meas)};
}

IdentResult identify_conductivity(const IdentConfig& cfg) {
    auto ctx = std::make_shared<const IdentContext>(make_context(cfg));
    const Index n = cfg.nodes.size();

    // The softened limiter lets the state dip marginally below zero; the
    // objective is extended outside the box by evaluating at the clamped point.
    auto clamp = [](const Vec& t) -> Vec { return t.cwiseMax(0.0); };
    BoxProblem problem(
        "pde-ident", [ctx, clamp](const Vec& t) { return objective_eval(clamp(t), *ctx); },
        [ctx, clamp](const Vec& t) { return fd_gradient(clamp(t), *ctx); }, Vec::Zero(n),
        Vec::Constant(n, kInf));

    SolveOptions opts;
    opts.method = Method::UnconstrainedLike;
    opts.integrator = IntegratorKind::StiffImplicit;
    opts.horizon = cfg.horizon;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.stationarity_tol = cfg.stationarity_tol;
    opts.seed = cfg.seed;

    IdentResult out;
    out.report = solve_to_stationarity(problem, GainMatrix::identity(n, cfg.gain), opts, cfg.theta0);
    out.recovered_values = ConductivityModel(cfg.nodes, out.report.final_theta).node_values();
    out.truth_values = cfg.truth_values;
    out.max_node_error = (out.recovered_values - cfg.truth_values).lpNorm<Eigen::Infinity>();

    const double at_bound = cfg.abs_tol;
    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (const auto& s : out.report.samples) {
        for (Index j = 0; j < n; ++j) {
            const bool now = s.theta[j] <= at_bound;
            const auto idx = static_cast<std::size_t>(j);
            if (now != on[idx])
                out.bound_events.push_back(
                    {j, s.tau, now ? BoundEvent::Kind::Touch : BoundEvent::Kind::Depart});
            on[idx] = now;
        }
    }
    return out;
}

} // namespace boxflow::pde
