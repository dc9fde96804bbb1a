#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace boxflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using ObjectiveFn = std::function<double(const Vec&)>;
using GradientFn = std::function<Vec(const Vec&)>;

/// Minimize f(theta) subject to lower <= theta <= upper.
///
/// Bounds may be infinite on either side. Equal bounds are rejected: a fixed
/// parameter is an equality constraint, which this library does not model.
/// Evaluators must be pure; a problem may be shared between concurrent solves.
class BoxProblem {
public:
    BoxProblem(std::string name, ObjectiveFn objective, GradientFn gradient, Vec lower,
               Vec upper);

    Index dim() const { return lower_.size(); }
    const std::string& name() const { return name_; }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

    double objective(const Vec& theta) const;
    Vec gradient(const Vec& theta) const;

    /// Same objective with a different box.
    BoxProblem with_bounds(Vec lower, Vec upper) const;

private:
    std::string name_;
    ObjectiveFn objective_;
    GradientFn gradient_;
    Vec lower_;
    Vec upper_;
};

/// Componentwise clamp onto the box.
Vec project_to_box(const Vec& theta, const BoxProblem& problem);

struct FeasibilityCheck {
    bool feasible = true;
    double worst_violation = 0.0;
};

FeasibilityCheck check_feasible(const Vec& theta, const BoxProblem& problem, double tol);

/// Positive-definite gain K in d(theta)/dtau = -K grad.
///
/// A diagonal gain keeps its entries as a vector; a dense gain is verified
/// symmetric and factorized at construction.
class GainMatrix {
public:
    enum class Kind { Diagonal, Dense };

    static GainMatrix diagonal(Vec entries);
    static GainMatrix dense(const Mat& matrix);
    static GainMatrix identity(Index n, double scale = 1.0);

    Kind kind() const { return kind_; }
    bool is_diagonal() const { return kind_ == Kind::Diagonal; }
    Index dim() const;

    /// Diagonal entries; throws for a dense gain.
    const Vec& diagonal_entries() const;
    Mat to_dense() const;

    /// K * v
    Vec apply(const Vec& v) const;
    /// K^{-1} * v
    Vec solve(const Vec& v) const;

private:
    GainMatrix() = default;

    Kind kind_ = Kind::Diagonal;
    Vec diag_;
    Mat dense_;
    Eigen::LLT<Mat> llt_;
};

/// How the limited integrator behaves at a bound.
struct LimiterMode {
    enum class Kind { Exact, Softened };

    Kind kind = Kind::Softened;
    double k_upper = 1.0;
    double k_lower = 1.0;

    static LimiterMode exact() { return {Kind::Exact, 0.0, 0.0}; }
    static LimiterMode softened(double k_upper = 1.0, double k_lower = 1.0);
};

enum class Method { UnconstrainedLike, GeneralDynamic, ProjectedGradientBaseline };
enum class IntegratorKind { ExplicitRK45, StiffImplicit };

std::string to_string(Method m);
std::string to_string(IntegratorKind k);

struct SolveOptions {
    Method method = Method::UnconstrainedLike;
    IntegratorKind integrator = IntegratorKind::ExplicitRK45;
    LimiterMode limiter = LimiterMode::softened();

    double rel_tol = 1e-3;
    double abs_tol = 1e-6;
    double horizon = 100.0;
    double stationarity_tol = 1e-8;
    double active_tol = 1e-10;
    double degeneracy_tol = 1e-6;

    // Stop as soon as the projected KKT residual drops below stationarity_tol.
    // When false the flow is integrated over the full horizon.
    bool stop_at_stationarity = true;

    // Record every k-th accepted step.
    std::size_t sample_stride = 1;
    // If positive, steps are shortened to land on every multiple of this
    // interval and only those points are recorded (plus the final one).
    double sample_interval = 0.0;

    std::uint64_t seed = 0;

    std::optional<double> initial_step;
    std::optional<double> max_step;
    std::size_t max_steps = 1'000'000;

    // Lets a dense gain through the limited-integrator flow. Only meaningful
    // for reproducing the failure of that flow with non-diagonal gains.
    bool allow_dense_limited = false;

    void validate() const;
};

} // namespace boxflow
