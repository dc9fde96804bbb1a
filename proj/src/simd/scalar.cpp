#include "boxflow/simd/kernels.hpp"

#include <cmath>

namespace boxflow::simd {
namespace {

// Selects are written as `a > b ? a : b` / `a < b ? a : b` so they agree
// bit for bit with _mm256_max_pd / _mm256_min_pd, including signed zeros.
inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(double a, double b) { return a < b ? a : b; }

void clamp(CSpan x, CSpan lo, CSpan hi, MSpan out) {
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = vmin(vmax(x[i], lo[i]), hi[i]);
}

void neg_scale(CSpan d, CSpan g, MSpan out) {
    for (std::size_t i = 0; i < d.size(); ++i)
        out[i] = -(d[i] * g[i]);
}

void limit_exact(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, MSpan out) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const bool at_hi = theta[i] >= hi[i] - tol && x[i] >= 0.0;
        const bool at_lo = theta[i] <= lo[i] + tol && x[i] <= 0.0;
        out[i] = (at_hi || at_lo) ? 0.0 : x[i];
    }
}

void limit_softened(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, double k_hi,
                    double k_lo, MSpan out) {
    const double nk_hi = -k_hi;
    const double nk_lo = -k_lo;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const bool at_hi = theta[i] >= hi[i] - tol && x[i] >= 0.0;
        const bool at_lo = theta[i] <= lo[i] + tol && x[i] <= 0.0;
        if (at_hi)
            out[i] = nk_hi * (theta[i] - hi[i]);
        else if (at_lo)
            out[i] = nk_lo * (theta[i] - lo[i]);
        else
            out[i] = x[i];
    }
}

double projected_residual(CSpan theta, CSpan grad, CSpan lo, CSpan hi, double tol, MSpan out) {
    double norm = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const bool at_lo = theta[i] <= lo[i] + tol;
        const bool at_hi = theta[i] >= hi[i] - tol;
        double r = grad[i];
        if (at_lo)
            r = vmin(grad[i], 0.0);
        else if (at_hi)
            r = vmax(grad[i], 0.0);
        out[i] = r;
        norm = vmax(std::fabs(r), norm);
    }
    return norm;
}

void axpy(double a, CSpan x, MSpan y) {
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = y[i] + a * x[i];
}

double scaled_error_max(CSpan err, CSpan y0, CSpan y1, double atol, double rtol) {
    double worst = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double scale = atol + rtol * vmax(std::fabs(y0[i]), std::fabs(y1[i]));
        worst = vmax(std::fabs(err[i]) / scale, worst);
    }
    return worst;
}

// max(v, floor) with the corner rounded off: equals floor for v <= 0 and v
// for v >= 2 floor, quadratic in between, continuously differentiable.
inline double soft_floor(double v, double floor) {
    if (!(floor > 0.0))
        return vmax(v, floor);
    const double q = vmin(vmax(v, 0.0), 2.0 * floor);
    return vmax(v, floor + q * q / (4.0 * floor));
}

void barycentric(CSpan nodes, CSpan weights, CSpan values, double floor, CSpan t, MSpan out) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        double num = 0.0;
        double den = 0.0;
        double exact = 0.0;
        bool hit = false;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double diff = t[i] - nodes[j];
            if (diff == 0.0) {
                hit = true;
                exact = values[j];
            }
            const double c = weights[j] / diff;
            num = num + c * values[j];
            den = den + c;
        }
        const double v = hit ? exact : num / den;
        out[i] = soft_floor(v, floor);
    }
}

} // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",         clamp, neg_scale, limit_exact,      limit_softened,
        projected_residual, axpy, scaled_error_max, barycentric,
    };
    return table;
}

} // namespace boxflow::simd
