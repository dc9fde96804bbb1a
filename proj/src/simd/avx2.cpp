// Compiled with -mavx2 (no -mfma) and only called after a runtime CPU check.

#include "boxflow/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace boxflow::simd {
namespace {

constexpr std::size_t W = 4;

inline double smax(double a, double b) { return a > b ? a : b; }
inline double smin(double a, double b) { return a < b ? a : b; }

inline __m256d vabs(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline double hmax(__m256d v) {
    alignas(32) double lanes[W];
    _mm256_store_pd(lanes, v);
    return smax(smax(lanes[0], lanes[1]), smax(lanes[2], lanes[3]));
}

void clamp(CSpan x, CSpan lo, CSpan hi, MSpan out) {
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        __m256d v = _mm256_max_pd(_mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&lo[i]));
        v = _mm256_min_pd(v, _mm256_loadu_pd(&hi[i]));
        _mm256_storeu_pd(&out[i], v);
    }
    for (; i < n; ++i)
        out[i] = smin(smax(x[i], lo[i]), hi[i]);
}

void neg_scale(CSpan d, CSpan g, MSpan out) {
    const std::size_t n = d.size();
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(&d[i]), _mm256_loadu_pd(&g[i]));
        _mm256_storeu_pd(&out[i], _mm256_xor_pd(p, sign));
    }
    for (; i < n; ++i)
        out[i] = -(d[i] * g[i]);
}

// Lane masks for the two bound branches of the limiter.
struct BoundMasks {
    __m256d at_hi;
    __m256d at_lo;
};

inline BoundMasks bound_masks(__m256d th, __m256d xv, __m256d lov, __m256d hiv, __m256d tolv) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d near_hi = _mm256_cmp_pd(th, _mm256_sub_pd(hiv, tolv), _CMP_GE_OQ);
    const __m256d near_lo = _mm256_cmp_pd(th, _mm256_add_pd(lov, tolv), _CMP_LE_OQ);
    const __m256d push_up = _mm256_cmp_pd(xv, zero, _CMP_GE_OQ);
    const __m256d push_dn = _mm256_cmp_pd(xv, zero, _CMP_LE_OQ);
    return {_mm256_and_pd(near_hi, push_up), _mm256_and_pd(near_lo, push_dn)};
}

void limit_exact(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, MSpan out) {
    const std::size_t n = theta.size();
    const __m256d tolv = _mm256_set1_pd(tol);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d xv = _mm256_loadu_pd(&x[i]);
        const auto m = bound_masks(_mm256_loadu_pd(&theta[i]), xv, _mm256_loadu_pd(&lo[i]),
                                   _mm256_loadu_pd(&hi[i]), tolv);
        const __m256d stop = _mm256_or_pd(m.at_hi, m.at_lo);
        _mm256_storeu_pd(&out[i], _mm256_blendv_pd(xv, _mm256_setzero_pd(), stop));
    }
    for (; i < n; ++i) {
        const bool at_hi = theta[i] >= hi[i] - tol && x[i] >= 0.0;
        const bool at_lo = theta[i] <= lo[i] + tol && x[i] <= 0.0;
        out[i] = (at_hi || at_lo) ? 0.0 : x[i];
    }
}

void limit_softened(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, double k_hi,
                    double k_lo, MSpan out) {
    const std::size_t n = theta.size();
    const double nk_hi = -k_hi;
    const double nk_lo = -k_lo;
    const __m256d tolv = _mm256_set1_pd(tol);
    const __m256d nkh = _mm256_set1_pd(nk_hi);
    const __m256d nkl = _mm256_set1_pd(nk_lo);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d th = _mm256_loadu_pd(&theta[i]);
        const __m256d xv = _mm256_loadu_pd(&x[i]);
        const __m256d lov = _mm256_loadu_pd(&lo[i]);
        const __m256d hiv = _mm256_loadu_pd(&hi[i]);
        const auto m = bound_masks(th, xv, lov, hiv, tolv);
        const __m256d pull_hi = _mm256_mul_pd(nkh, _mm256_sub_pd(th, hiv));
        const __m256d pull_lo = _mm256_mul_pd(nkl, _mm256_sub_pd(th, lov));
        __m256d v = _mm256_blendv_pd(xv, pull_lo, m.at_lo);
        v = _mm256_blendv_pd(v, pull_hi, m.at_hi);
        _mm256_storeu_pd(&out[i], v);
    }
    for (; i < n; ++i) {
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
    const std::size_t n = theta.size();
    const __m256d tolv = _mm256_set1_pd(tol);
    const __m256d zero = _mm256_setzero_pd();
    __m256d acc = zero;
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d th = _mm256_loadu_pd(&theta[i]);
        const __m256d g = _mm256_loadu_pd(&grad[i]);
        const __m256d at_lo =
            _mm256_cmp_pd(th, _mm256_add_pd(_mm256_loadu_pd(&lo[i]), tolv), _CMP_LE_OQ);
        const __m256d at_hi =
            _mm256_cmp_pd(th, _mm256_sub_pd(_mm256_loadu_pd(&hi[i]), tolv), _CMP_GE_OQ);
        __m256d r = _mm256_blendv_pd(g, _mm256_max_pd(g, zero), at_hi);
        r = _mm256_blendv_pd(r, _mm256_min_pd(g, zero), at_lo);
        _mm256_storeu_pd(&out[i], r);
        acc = _mm256_max_pd(vabs(r), acc);
    }
    double norm = hmax(acc);
    for (; i < n; ++i) {
        const bool at_lo = theta[i] <= lo[i] + tol;
        const bool at_hi = theta[i] >= hi[i] - tol;
        double r = grad[i];
        if (at_lo)
            r = smin(grad[i], 0.0);
        else if (at_hi)
            r = smax(grad[i], 0.0);
        out[i] = r;
        norm = smax(std::fabs(r), norm);
    }
    return norm;
}

void axpy(double a, CSpan x, MSpan y) {
    const std::size_t n = x.size();
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d p = _mm256_mul_pd(av, _mm256_loadu_pd(&x[i]));
        _mm256_storeu_pd(&y[i], _mm256_add_pd(_mm256_loadu_pd(&y[i]), p));
    }
    for (; i < n; ++i)
        y[i] = y[i] + a * x[i];
}

double scaled_error_max(CSpan err, CSpan y0, CSpan y1, double atol, double rtol) {
    const std::size_t n = err.size();
    const __m256d av = _mm256_set1_pd(atol);
    const __m256d rv = _mm256_set1_pd(rtol);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d mag =
            _mm256_max_pd(vabs(_mm256_loadu_pd(&y0[i])), vabs(_mm256_loadu_pd(&y1[i])));
        const __m256d scale = _mm256_add_pd(av, _mm256_mul_pd(rv, mag));
        const __m256d e = _mm256_div_pd(vabs(_mm256_loadu_pd(&err[i])), scale);
        acc = _mm256_max_pd(e, acc);
    }
    double worst = hmax(acc);
    for (; i < n; ++i) {
        const double scale = atol + rtol * smax(std::fabs(y0[i]), std::fabs(y1[i]));
        worst = smax(std::fabs(err[i]) / scale, worst);
    }
    return worst;
}

inline double soft_floor(double v, double floor) {
    if (!(floor > 0.0))
        return smax(v, floor);
    const double q = smin(smax(v, 0.0), 2.0 * floor);
    return smax(v, floor + q * q / (4.0 * floor));
}

void barycentric(CSpan nodes, CSpan weights, CSpan values, double floor, CSpan t, MSpan out) {
    const std::size_t n = t.size();
    const __m256d zero = _mm256_setzero_pd();
    const __m256d fl = _mm256_set1_pd(floor);
    const __m256d fl2 = _mm256_set1_pd(2.0 * floor);
    const __m256d fl4 = _mm256_set1_pd(4.0 * floor);
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d tv = _mm256_loadu_pd(&t[i]);
        __m256d num = zero;
        __m256d den = zero;
        __m256d exact = zero;
        __m256d hit = zero;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const __m256d diff = _mm256_sub_pd(tv, _mm256_set1_pd(nodes[j]));
            const __m256d vj = _mm256_set1_pd(values[j]);
            const __m256d is_node = _mm256_cmp_pd(diff, zero, _CMP_EQ_OQ);
            exact = _mm256_blendv_pd(exact, vj, is_node);
            hit = _mm256_or_pd(hit, is_node);
            const __m256d c = _mm256_div_pd(_mm256_set1_pd(weights[j]), diff);
            num = _mm256_add_pd(num, _mm256_mul_pd(c, vj));
            den = _mm256_add_pd(den, c);
        }
        const __m256d v = _mm256_blendv_pd(_mm256_div_pd(num, den), exact, hit);
        if (!(floor > 0.0)) {
            _mm256_storeu_pd(&out[i], _mm256_max_pd(v, fl));
            continue;
        }
        const __m256d q = _mm256_min_pd(_mm256_max_pd(v, zero), fl2);
        const __m256d round = _mm256_add_pd(fl, _mm256_div_pd(_mm256_mul_pd(q, q), fl4));
        _mm256_storeu_pd(&out[i], _mm256_max_pd(v, round));
    }
    for (; i < n; ++i) {
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

const KernelTable& avx2_table() {
    static const KernelTable table{
        "avx2",             clamp, neg_scale, limit_exact,      limit_softened,
        projected_residual, axpy,  scaled_error_max, barycentric,
    };
    return table;
}

} // namespace boxflow::simd
