#include "boxflow/problems.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "boxflow/errors.hpp"

namespace boxflow {

BoxProblem example1() {
    auto f = [](const Vec& t) {
        return (t[0] + 1.0) * (t[0] + 1.0) + (t[1] - 2.0) * (t[1] - 2.0);
    };
    auto g = [](const Vec& t) {
        Vec d(2);
        d << 2.0 * (t[0] + 1.0), 2.0 * (t[1] - 2.0);
        return d;
    };
    return BoxProblem("example1", f, g, Vec::Zero(2), Vec::Constant(2, 10.0));
}

BoxProblem example2(double lower) {
    if (!(lower < 1.0))
        throw ArgumentError("example2: lower bound must be below 1");
    auto f = [](const Vec& t) {
        const double a = t[0], b = t[1];
        return -0.5 * (a * a - b * b) - a * a * b + a;
    };
    auto g = [](const Vec& t) {
        const double a = t[0], b = t[1];
        Vec d(2);
        d << -a - 2.0 * a * b + 1.0, b - a * a;
        return d;
    };
    std::ostringstream name;
    name << "example2";
    if (lower != 0.0)
        name << ':' << lower;
    return BoxProblem(name.str(), f, g, Vec::Constant(2, lower), Vec::Ones(2));
}

double genwood_block(double a, double b, double c, double d) {
    const double p = b - a * a;
    const double q = d - c * c;
    const double s = b + d - 2.0;
    const double r = b - d;
    return 100.0 * p * p + (1.0 - a) * (1.0 - a) + 90.0 * q * q + (1.0 - c) * (1.0 - c) +
           10.0 * s * s + 0.1 * r * r;
}

BoxProblem genwood(Index n) {
    if (n < 4 || n % 4 != 0)
        throw ArgumentError("genwood: n must be a positive multiple of 4");
    auto f = [](const Vec& t) {
        double sum = 1.0;
        for (Index i = 0; i + 3 < t.size(); i += 4)
            sum += genwood_block(t[i], t[i + 1], t[i + 2], t[i + 3]);
        return sum;
    };
    auto g = [](const Vec& t) {
        Vec d(t.size());
        for (Index i = 0; i + 3 < t.size(); i += 4) {
            const double a = t[i], b = t[i + 1], c = t[i + 2], e = t[i + 3];
            const double p = b - a * a;
            const double q = e - c * c;
            const double s = b + e - 2.0;
            const double r = b - e;
            d[i] = -400.0 * p * a - 2.0 * (1.0 - a);
            d[i + 1] = 200.0 * p + 20.0 * s + 0.2 * r;
            d[i + 2] = -360.0 * q * c - 2.0 * (1.0 - c);
            d[i + 3] = 180.0 * q + 20.0 * s - 0.2 * r;
        }
        return d;
    };
    return BoxProblem("genwood:" + std::to_string(n), f, g, Vec::Constant(n, 1.1),
                      Vec::Constant(n, 2.1));
}

namespace {

double parse_double(const std::string& s, const std::string& id) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw ArgumentError("unknown problem '" + id + "'");
    return v;
}

} // namespace

ProblemSpec make_problem(const std::string& id) {
    const auto colon = id.find(':');
    const std::string base = id.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : id.substr(colon + 1);

    if (base == "example1" && arg.empty()) {
        Vec init(2), gain(2), opt(2);
        init << 5.0, 5.0;
        gain << 0.5, 1.0;
        opt << 0.0, 2.0;
        return {id, example1(), init, GainMatrix::diagonal(gain), 100.0,
                IntegratorKind::ExplicitRK45, opt};
    }
    if (base == "example2") {
        const double lower = arg.empty() ? 0.0 : parse_double(arg, id);
        Vec gain(2);
        gain << 0.5, 1.0;
        std::optional<Vec> opt;
        if (lower == 0.0 || lower == 0.1)
            opt = Vec::Constant(2, lower);
        return {id, example2(lower), Vec::Constant(2, 0.5), GainMatrix::diagonal(gain), 50.0,
                IntegratorKind::ExplicitRK45, opt};
    }
    if (base == "genwood") {
        const double nd = arg.empty() ? 100.0 : parse_double(arg, id);
        if (nd != std::floor(nd) || nd < 4 || nd > 1e7)
            throw ArgumentError("genwood: n must be a positive multiple of 4");
        const auto n = static_cast<Index>(nd);
        auto problem = genwood(n);
        Vec opt(n);
        for (Index i = 0; i < n; i += 4) {
            opt[i] = 1.1;
            opt[i + 1] = 1.1753;
            opt[i + 2] = 1.1;
            opt[i + 3] = 1.1715;
        }
        return {id, std::move(problem), Vec::Constant(n, 1.1), GainMatrix::identity(n), 10.0,
                IntegratorKind::StiffImplicit, opt};
    }
    throw ArgumentError("unknown problem '" + id + "'");
}

GradientCheck fd_check_gradient(const BoxProblem& problem, const Vec& theta,
                                std::optional<double> h) {
    if (theta.size() != problem.dim())
        throw ArgumentError("fd_check_gradient: dimension mismatch");
    const double base = h.value_or(std::cbrt(std::numeric_limits<double>::epsilon()));
    if (!(base > 0.0))
        throw ArgumentError("fd_check_gradient: h must be positive");

    const Vec grad = problem.gradient(theta);
    GradientCheck out;
    Vec t = theta;
    for (Index i = 0; i < theta.size(); ++i) {
        const double hi = base * (1.0 + std::fabs(theta[i]));
        t[i] = theta[i] + hi;
        const double fp = problem.objective(t);
        t[i] = theta[i] - hi;
        const double fm = problem.objective(t);
        t[i] = theta[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw EvaluationError("fd_check_gradient: objective is not finite near theta");
        const double fd = (fp - fm) / (2.0 * hi);
        const double err = std::fabs(fd - grad[i]) / std::max(1.0, std::fabs(grad[i]));
        out.max_rel_error = std::max(out.max_rel_error, err);
    }
    out.pass = out.max_rel_error <= 1e-5;
    return out;
}

} // namespace boxflow
