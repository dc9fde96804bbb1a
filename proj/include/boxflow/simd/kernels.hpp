#pragma once

// Elementwise kernels behind the flow right-hand sides, the KKT residual,
// the Runge-Kutta stage updates and the conductivity model.
//
// Every kernel has a scalar reference in scalar.cpp. Where the CPU supports
// it an AVX2 variant is selected at runtime. Variants perform the same IEEE
// operations in the same order per element (no FMA contraction), so results
// are bit-identical to the scalar reference.

#include <cstddef>
#include <span>
#include <string_view>

namespace boxflow::simd {

using CSpan = std::span<const double>;
using MSpan = std::span<double>;

struct KernelTable {
    std::string_view name;

    // out = clamp(x, lo, hi)
    void (*clamp)(CSpan x, CSpan lo, CSpan hi, MSpan out);

    // out = -(d .* g)
    void (*neg_scale)(CSpan d, CSpan g, MSpan out);

    // Hard limiter: out_i = 0 if (theta_i >= hi_i - tol and x_i >= 0) or
    // (theta_i <= lo_i + tol and x_i <= 0), else x_i.
    void (*limit_exact)(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, MSpan out);

    // Soft limiter: the bound branches are replaced by first-order pull-back
    // -k_hi (theta - hi) and -k_lo (theta - lo).
    void (*limit_softened)(CSpan theta, CSpan x, CSpan lo, CSpan hi, double tol, double k_hi,
                           double k_lo, MSpan out);

    // Projected gradient residual; returns its infinity norm.
    double (*projected_residual)(CSpan theta, CSpan grad, CSpan lo, CSpan hi, double tol,
                                 MSpan out);

    // y += a * x
    void (*axpy)(double a, CSpan x, MSpan y);

    // max_i |err_i| / (atol + rtol * max(|y0_i|, |y1_i|))
    double (*scaled_error_max)(CSpan err, CSpan y0, CSpan y1, double atol, double rtol);

    // Barycentric (second form) Lagrange interpolation through
    // (nodes_j, values_j) with barycentric weights w_j, floored at `floor`.
    // Evaluation exactly at a node returns that node's value.
    void (*barycentric)(CSpan nodes, CSpan weights, CSpan values, double floor, CSpan t,
                        MSpan out);
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_kernels();

/// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// Table used by the library. Chosen on first use: AVX2 if available unless
/// the environment variable BOXFLOW_SIMD is set to "scalar".
const KernelTable& active();

Backend active_backend();

/// Override the runtime choice. Returns false if the backend is unavailable.
bool set_backend(Backend backend);

} // namespace boxflow::simd
