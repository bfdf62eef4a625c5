#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spinglass/cascade.hpp"
#include "spinglass/mixture.hpp"

namespace spinglass {

/// Nondecreasing nonnegative step function q(u) = v_ceil(u m) on [0, 1].
class StepPath {
public:
    explicit StepPath(std::vector<double> values);
    static StepPath constant(double h, int m) { return StepPath(std::vector<double>(static_cast<std::size_t>(m), h)); }

    int m() const noexcept { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t j) const noexcept { return values_[j]; }
    /// (1/m) sum_j v_j, the integral of q over [0, 1].
    double integral() const;

private:
    std::vector<double> values_;
};

struct PathPair {
    StepPath q1;
    StepPath q2;
    PathPair(StepPath a, StepPath b);
    int m() const noexcept { return q1.m(); }
};

/// Nonlinearity of the equation: a single-type mixture, or the bipartite product.
struct HjModel {
    bool bipartite = false;
    Mixture xi = Mixture::sk();
    static HjModel single(Mixture m) { return {false, std::move(m)}; }
    static HjModel product() { return {true, Mixture::sk()}; }
};

/// psi(q) = v_m - E log 2cosh of the cascade with variances 2(v_j - v_{j-1}) and
/// exponents (j-1)/m. Constant paths give h - E log 2cosh(sqrt(2h) Z).
double psi_initial(const StepPath& q, const CascadeGrid& grid = {});
double psi_initial(const PathPair& q, const CascadeGrid& grid = {});

/// Density of the derivative of psi: entry j is m * d psi / d v_j, computed
/// from the tilted measure of the cascade.
std::vector<double> psi_gradient(const StepPath& q, const CascadeGrid& grid = {});

using PathFunctional = std::function<double(const StepPath&)>;

/// Finite-difference derivative density of g on the grid. Perturbations add a
/// constant on a tail of cells, so they never break monotonicity upward; central
/// differences are used when the downward move also stays in the path space.
std::vector<double> path_gradient(const PathFunctional& g, const StepPath& q, double step = 1e-4);

struct HopfLaxOptions {
    int starts = 4;
    std::uint64_t seed = 7;
    double ftol = 1e-10;
    int max_evaluations = 300;  // simplex polish budget per start
    CascadeGrid grid{};
};

struct HopfLaxResult {
    double value = 0.0;
    std::vector<double> increment;  // maximizing q'
    bool converged = true;
    int evaluations = 0;
};

/// sup over q' in the path space of psi(q + q') - t (1/m) sum_j xi*(q'_j / t).
HopfLaxResult hopf_lax(double t, const StepPath& q, const Mixture& xi, const HopfLaxOptions& opts = {});

/// Converts the enriched (t, 0) value to the Parisi convention: -f + t xi(1), beta = sqrt(2t).
double hopf_lax_to_parisi(double f, double t, const Mixture& xi);

struct CharacteristicPrediction {
    double t = 0.0;
    std::vector<std::vector<double>> source;    // one component, or two for the bipartite model
    std::vector<std::vector<double>> target;
    std::vector<std::vector<double>> gradient;  // p = d psi at the source
    double predicted_value = 0.0;
    bool feasible = true;
    double line_residual = 0.0;  // sup-norm of source - t grad xi(p) - target, when solved for
};

CharacteristicPrediction characteristic_predict(const StepPath& q, double t, const Mixture& xi,
                                                const CascadeGrid& grid = {});
CharacteristicPrediction characteristic_predict(const PathPair& q, double t, const CascadeGrid& grid = {});

struct CharacteristicSearch {
    int random_starts = 12;
    std::uint64_t seed = 11;
    int max_iterations = 200;
    double tolerance = 1e-9;
    double dedup = 1e-5;
    CascadeGrid grid{};
};

struct CharacteristicSet {
    std::vector<CharacteristicPrediction> predictions;  // sorted by predicted value
    std::string diagnostic;
};

/// All characteristic lines found that end at the target at time t. None is selected.
CharacteristicSet characteristics_through(double t, const StepPath& target, const Mixture& xi,
                                          const CharacteristicSearch& search = {});
CharacteristicSet characteristics_through(double t, const PathPair& target,
                                          const CharacteristicSearch& search = {});

/// d_t f - (1/m) sum_j xi(d_q f) on a (t, path) stencil; one-sided in t at t < dt.
double hj_residual(const std::function<double(double, const StepPath&)>& f, double t, const StepPath& q,
                   const Mixture& xi, double dt = 1e-3, double dq = 1e-3);
double hj_residual(const std::function<double(double, const PathPair&)>& f, double t, const PathPair& q,
                   double dt = 1e-3, double dq = 1e-3);

/// Constant-path stencil: f at (t +- dt, h) and (t, h +- dh), plus (t, h2 +- dh) for bipartite data.
struct ConstantPathStencil {
    double dt = 0.0;
    double dh = 0.0;
    double f_t_plus = 0.0;
    double f_t_minus = 0.0;
    double f_h_plus = 0.0;
    double f_h_minus = 0.0;
    double f_h2_plus = 0.0;
    double f_h2_minus = 0.0;
};

/// d_t f - xi(d_h f), or d_t f - d_h1 f d_h2 f for the bipartite model.
double hj_residual(const ConstantPathStencil& s, const HjModel& model);

}  // namespace spinglass
