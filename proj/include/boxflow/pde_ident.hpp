#pragma once

// Conductivity identification for 1-D nonlinear heat conduction:
//   rho cp dT/dt = d/dx (k(T) dT/dx)  on [0, L]
// with k(T) a Lagrange interpolant whose node values are cumulative sums of
// the nonnegative parameters theta.

#include <cstdint>
#include <functional>
#include <vector>

#include "boxflow/core.hpp"
#include "boxflow/report.hpp"

namespace boxflow::pde {

struct MaterialParams {
    double rho = 1000.0; // kg/m^3
    double cp = 1000.0;  // J/(kg K)
    double L = 0.01;     // m

    void validate() const;
};

/// k(T) = sum_i (sum_{j<=i} theta_j) phi_i(T) over the Lagrange basis of
/// `nodes`, evaluated in barycentric form. Values below 2 kFloor are lifted by a
/// rounded floor (kFloor at zero and below), so k stays positive and smooth.
class ConductivityModel {
public:
    static constexpr double kFloor = 1e-3;

    ConductivityModel(Vec nodes, Vec theta);

    const Vec& nodes() const { return nodes_; }
    const Vec& theta() const { return theta_; }
    /// k at the nodes: the cumulative sums of theta.
    const Vec& node_values() const { return values_; }

    double eval(double T) const;
    void eval(const Vec& T, Vec& out) const;

private:
    Vec nodes_;
    Vec theta_;
    Vec values_;
    Vec weights_;
};

/// n equally spaced temperatures over [lo, hi].
Vec equispaced_nodes(Index n, double lo, double hi);

/// Increments whose cumulative sums are `node_values`.
Vec increments_from_values(const Vec& node_values);

struct GridSpec {
    Index nx = 51;
    double dt = 0.1;
    double t_end = 100.0;

    Index steps() const;
    void validate() const;
};

/// Initial temperature, a left wall ramped linearly up to a ceiling, and a
/// fixed right wall.
struct BoundaryConditions {
    double t_init = 600.0;
    double left_start = 600.0;
    double left_rate = 16.0; // K/s
    double left_final = 1000.0;
    double right = 600.0;

    double left(double t) const;
};

struct TemperatureField {
    Vec x;
    Vec t;
    // Row k holds the nodal temperatures at time t[k].
    Mat T;

    /// Linear interpolation in x at time index k.
    double at(Index k, double x_pos) const;
};

/// Implicit Euler in time with the conductivity lagged by Picard sweeps
/// (to 1e-8 K or 20 sweeps), conservative central differences in space with
/// face conductivities averaged from the neighbouring nodes.
///
/// Throws ModelError if the sweeps do not settle or k is not positive.
TemperatureField forward_solve(const MaterialParams& mat, const ConductivityModel& model,
                               const GridSpec& grid, const BoundaryConditions& bc);

class MeasurementSet {
public:
    /// values(i, k) is sensor i at times[k]. Weights must be positive and sum to 1.
    MeasurementSet(std::vector<double> positions, std::vector<double> weights, Vec times,
                   Mat values, double noise_sigma, std::uint64_t seed);

    const std::vector<double>& positions() const { return positions_; }
    const std::vector<double>& weights() const { return weights_; }
    const Vec& times() const { return times_; }
    const Mat& values() const { return values_; }
    double noise_sigma() const { return noise_sigma_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::vector<double> positions_;
    std::vector<double> weights_;
    Vec times_;
    Mat values_;
    double noise_sigma_;
    std::uint64_t seed_;
};

/// Samples the field at every stored time and adds one N(0, sigma^2) draw per
/// instant, shared by all sensors. sigma = 0 gives the exact samples.
MeasurementSet synthesize_measurements(const TemperatureField& field,
                                       const std::vector<double>& positions,
                                       const std::vector<double>& weights, double sigma,
                                       std::uint64_t seed);

/// Everything besides theta that the least-squares objective depends on.
struct IdentContext {
    MaterialParams material;
    Vec nodes;
    GridSpec grid;
    BoundaryConditions bc;
    MeasurementSet measurements;
};

/// J = integral over the measurement times of sum_i w_i (T(x_i, t) - T~_i(t))^2,
/// trapezoidal rule. Requires theta >= 0.
double objective_eval(const Vec& theta, const IdentContext& ctx);

/// Central differences with step 1e-4 (1 + |theta_j|); forward differences
/// where the backward point would cross zero.
Vec fd_gradient(const Vec& theta, const std::function<double(const Vec&)>& J);
Vec fd_gradient(const Vec& theta, const IdentContext& ctx);

struct IdentConfig {
    MaterialParams material;
    GridSpec grid;
    BoundaryConditions bc;
    Vec nodes = equispaced_nodes(5, 600.0, 1000.0);
    // k at the nodes used to synthesize the data.
    Vec truth_values = (Vec(5) << 0.86, 1.07, 1.29, 1.65, 2.09).finished();
    std::vector<double> positions;  // defaults to L/3 and 2L/3
    std::vector<double> weights{0.5, 0.5};
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    Vec theta0 = Vec::Constant(5, 2.0);
    double gain = 1.0;
    double horizon = 200.0;
    double rel_tol = 1e-3;
    double abs_tol = 1e-6;
    double stationarity_tol = 1e-8;

    void validate() const;
};

struct BoundEvent {
    enum class Kind { Touch, Depart };
    Index index;
    double tau;
    Kind kind;
};

struct IdentResult {
    SolveReport report;
    Vec recovered_values;
    Vec truth_values;
    double max_node_error = 0.0;
    std::vector<BoundEvent> bound_events;
};

/// Synthesizes the measurements from the truth, then runs the limited
/// gradient flow (stiff integrator, theta >= 0) from theta0.
IdentResult identify_conductivity(const IdentConfig& cfg);

/// The context identify_conductivity builds internally.
IdentContext make_context(const IdentConfig& cfg);

} // namespace boxflow::pde
