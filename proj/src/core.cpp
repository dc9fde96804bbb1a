#include "boxflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "boxflow/errors.hpp"
#include "detail.hpp"
#include "boxflow/simd/kernels.hpp"

namespace boxflow {

namespace {

using detail::view;

void require_dim(const Vec& theta, const BoxProblem& problem, const char* what) {
    if (theta.size() != problem.dim()) {
        std::ostringstream os;
        os << what << ": expected dimension " << problem.dim() << ", got " << theta.size();
        throw ArgumentError(os.str());
    }
}

} // namespace

BoxProblem::BoxProblem(std::string name, ObjectiveFn objective, GradientFn gradient, Vec lower,
                       Vec upper)
    : name_(std::move(name)), objective_(std::move(objective)), gradient_(std::move(gradient)),
      lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() == 0)
        throw ArgumentError("BoxProblem: dimension must be positive");
    if (lower_.size() != upper_.size())
        throw ArgumentError("BoxProblem: lower and upper bounds differ in length");
    if (!objective_ || !gradient_)
        throw ArgumentError("BoxProblem: objective and gradient evaluators are required");
    for (Index i = 0; i < lower_.size(); ++i) {
        if (std::isnan(lower_[i]) || std::isnan(upper_[i]))
            throw ArgumentError("BoxProblem: NaN bound");
        if (lower_[i] == kInf || upper_[i] == -kInf)
            throw ArgumentError("BoxProblem: lower bound +inf or upper bound -inf");
        if (!(lower_[i] < upper_[i])) {
            std::ostringstream os;
            os << "BoxProblem: bounds for component " << i << " are not strictly ordered ("
               << lower_[i] << " >= " << upper_[i] << ")";
            throw ArgumentError(os.str());
        }
    }
}

double BoxProblem::objective(const Vec& theta) const {
    require_dim(theta, *this, "objective");
    return objective_(theta);
}

Vec BoxProblem::gradient(const Vec& theta) const {
    require_dim(theta, *this, "gradient");
    Vec g = gradient_(theta);
    if (g.size() != dim())
        throw ArgumentError("gradient evaluator returned a vector of the wrong length");
    return g;
}

BoxProblem BoxProblem::with_bounds(Vec lower, Vec upper) const {
    return BoxProblem(name_, objective_, gradient_, std::move(lower), std::move(upper));
}

Vec project_to_box(const Vec& theta, const BoxProblem& problem) {
    require_dim(theta, problem, "project_to_box");
    Vec out(theta.size());
    simd::active().clamp(view(theta), view(problem.lower()), view(problem.upper()), view(out));
    return out;
}

FeasibilityCheck check_feasible(const Vec& theta, const BoxProblem& problem, double tol) {
    require_dim(theta, problem, "check_feasible");
    if (!(tol >= 0.0))
        throw ArgumentError("check_feasible: tolerance must be nonnegative");
    FeasibilityCheck out;
    for (Index i = 0; i < theta.size(); ++i) {
        const double over = std::max({0.0, problem.lower()[i] - theta[i], theta[i] - problem.upper()[i]});
        out.worst_violation = std::max(out.worst_violation, over);
    }
    out.feasible = out.worst_violation <= tol;
    return out;
}

GainMatrix GainMatrix::diagonal(Vec entries) {
    if (entries.size() == 0)
        throw ArgumentError("GainMatrix: empty diagonal");
    for (Index i = 0; i < entries.size(); ++i)
        if (!(entries[i] > 0.0) || !std::isfinite(entries[i]))
            throw ArgumentError("GainMatrix: diagonal entries must be finite and positive");
    GainMatrix k;
    k.kind_ = Kind::Diagonal;
    k.diag_ = std::move(entries);
    return k;
}

GainMatrix GainMatrix::dense(const Mat& matrix) {
    if (matrix.rows() == 0 || matrix.rows() != matrix.cols())
        throw ArgumentError("GainMatrix: dense gain must be square and nonempty");
    if (!matrix.allFinite())
        throw ArgumentError("GainMatrix: non-finite entry");
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ArgumentError("GainMatrix: dense gain is not symmetric");
    GainMatrix k;
    k.kind_ = Kind::Dense;
    k.dense_ = matrix;
    k.llt_.compute(matrix);
    if (k.llt_.info() != Eigen::Success)
        throw ArgumentError("GainMatrix: dense gain is not positive definite");
    return k;
}

GainMatrix GainMatrix::identity(Index n, double scale) {
    return diagonal(Vec::Constant(n, scale));
}

Index GainMatrix::dim() const { return is_diagonal() ? diag_.size() : dense_.rows(); }

const Vec& GainMatrix::diagonal_entries() const {
    if (!is_diagonal())
        throw MethodContractError("GainMatrix: diagonal entries requested from a dense gain");
    return diag_;
}

Mat GainMatrix::to_dense() const {
    if (is_diagonal())
        return diag_.asDiagonal();
    return dense_;
}

Vec GainMatrix::apply(const Vec& v) const {
    if (v.size() != dim())
        throw ArgumentError("GainMatrix::apply: dimension mismatch");
    if (is_diagonal())
        return diag_.cwiseProduct(v);
    return dense_ * v;
}

Vec GainMatrix::solve(const Vec& v) const {
    if (v.size() != dim())
        throw ArgumentError("GainMatrix::solve: dimension mismatch");
    if (is_diagonal())
        return v.cwiseQuotient(diag_);
    return llt_.solve(v);
}

LimiterMode LimiterMode::softened(double k_upper, double k_lower) {
    if (!(k_upper > 0.0) || !(k_lower > 0.0))
        throw ArgumentError("LimiterMode: limiting gains must be positive");
    return {Kind::Softened, k_upper, k_lower};
}

std::string to_string(Method m) {
    switch (m) {
    case Method::UnconstrainedLike: return "unconstrained-like";
    case Method::GeneralDynamic: return "general-dynamic";
    case Method::ProjectedGradientBaseline: return "pgd";
    }
    return "unknown";
}

std::string to_string(IntegratorKind k) {
    return k == IntegratorKind::ExplicitRK45 ? "rk45" : "stiff";
}

void SolveOptions::validate() const {
    const double tols[] = {rel_tol, abs_tol, stationarity_tol, active_tol, degeneracy_tol};
    for (double t : tols)
        if (!(t > 0.0))
            throw ArgumentError("SolveOptions: tolerances must be positive");
    if (!(horizon > 0.0))
        throw ArgumentError("SolveOptions: horizon must be positive");
    if (sample_stride == 0)
        throw ArgumentError("SolveOptions: sample_stride must be at least 1");
    if (sample_interval < 0.0)
        throw ArgumentError("SolveOptions: sample_interval must be nonnegative");
    if (max_steps == 0)
        throw ArgumentError("SolveOptions: max_steps must be at least 1");
    if (limiter.kind == LimiterMode::Kind::Softened && !(limiter.k_upper > 0.0 && limiter.k_lower > 0.0))
        throw ArgumentError("SolveOptions: limiting gains must be positive");
}

} // namespace boxflow
