#pragma once

#include <cstdint>
#include <vector>

#include "spinglass/cascade.hpp"

namespace spinglass {

/// Probability measure with finitely many atoms in [0, 1].
class AtomicMeasure {
public:
    /// Atoms strictly increasing in [0,1], weights positive and summing to 1 within 1e-12.
    AtomicMeasure(std::vector<double> atoms, std::vector<double> weights);
    /// Sorts, merges equal atoms, drops zero weights and renormalizes.
    static AtomicMeasure canonical(std::vector<double> atoms, std::vector<double> weights);
    static AtomicMeasure dirac(double q) { return AtomicMeasure({q}, {1.0}); }

    const std::vector<double>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return atoms_.size(); }

private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

/// mu([0, t]), right-continuous.
double measure_cdf(const AtomicMeasure& mu, double t);

enum class PdeScheme { finite_difference, recursive_quadrature };

struct PdeConfig {
    double half_width = 6.0;
    int nx = 1201;
    int nt = 400;
    PdeScheme scheme = PdeScheme::recursive_quadrature;
    int quad_order = 40;

    /// Defaults for a given beta: L = max(6, 4 beta sqrt(2) + 4), dx = 0.01,
    /// nt large enough that beta^2 dt / dx <= 0.5.
    static PdeConfig defaults(double beta);
    void validate() const;
    double dx() const { return 2.0 * half_width / (nx - 1); }
};

/// Phi_mu(0, 0) from a Crank-Nicolson / Heun finite-difference solve.
double parisi_pde_fd(const AtomicMeasure& mu, double beta, const PdeConfig& cfg);
/// Phi_mu(0, 0) from the exact Cole-Hopf recursion over the piecewise-constant coefficient.
double phi_recursive(const AtomicMeasure& mu, double beta, int quad_order = 40);
double phi_recursive(const AtomicMeasure& mu, double beta, const PdeConfig& cfg);
/// Recursion steps of Phi_mu: one per interval of constant mu([0, t]).
std::vector<CascadeStep> parisi_steps(const AtomicMeasure& mu, double beta);

/// Phi_mu(0,0) - beta^2 sum_j w_j (1 - q_j^2) / 2 + log 2.
double parisi_functional(const AtomicMeasure& mu, double beta, const PdeConfig& cfg);
double parisi_functional(const AtomicMeasure& mu, double beta);

struct ParisiOptions {
    int starts = 8;
    double ftol = 1e-7;
    int max_evaluations = 6000;
    std::uint64_t seed = 1;
    double grid_dx = 0.02;
    int quad_order = 40;
    /// Optional measure embedded as one of the starts (fewer atoms are padded).
    std::vector<double> warm_atoms;
    std::vector<double> warm_weights;
};

struct ParisiStart {
    int index = 0;
    std::vector<double> initial;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> atoms;
    std::vector<double> weights;
};

struct ParisiMinimum {
    AtomicMeasure measure = AtomicMeasure::dirac(0.0);
    double value = 0.0;
    bool converged = false;
    std::vector<ParisiStart> starts;
};

/// Multi-start Nelder-Mead over k-atom measures (logistic atoms, softmax weights).
ParisiMinimum minimize_parisi(double beta, int k, const ParisiOptions& opts = {});

}  // namespace spinglass
