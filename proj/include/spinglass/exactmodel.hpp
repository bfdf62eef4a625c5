#pragma once

#include <vector>

#include "spinglass/model.hpp"
#include "spinglass/random.hpp"

namespace spinglass {

inline constexpr int kSingleTypeCap = 20;
inline constexpr int kBipartiteCap = 13;
inline constexpr int kReplicaCap = 20;

struct FreeEnergyEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_samples = 0;
    int n = 0;
    std::vector<double> parameters;  // beta, or (t, h1, h2)
};

/// Mean and standard error of the mean; std_error is 0 for a single value.
FreeEnergyEstimate summarize(const std::vector<double>& values, int n,
                             std::vector<double> parameters);

/// (1/N) log sum_sigma exp(beta H(sigma)) by exact enumeration.
double free_energy_sample(const CouplingSample& c, double beta);

/// Disorder average of free_energy_sample; replica r uses rng.substream(r).
FreeEnergyEstimate mean_free_energy(const ModelSpec& spec, double beta, int n_samples,
                                    const RandomStream& rng);

enum class MaxMethod { exhaustive, greedy, local_search };

struct MaxResult {
    double value = 0.0;  // (1/N) H(argmax)
    Configuration argmax;
};

MaxResult max_energy(const CouplingSample& c, MaxMethod method);

/// Parameters of the enriched free energy at constant paths.
///
/// Single-type samples use h1 and ignore h2. z has config_length() entries;
/// for bipartite samples the first N belong to the first layer.
struct EnrichedParams {
    double t = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    std::vector<double> z;
};

/// -(1/N) log sum exp(sqrt(2t) H - N t xi(1) + sqrt(2h) z.sigma - N h).
double enriched_free_energy_sample(const CouplingSample& c, const EnrichedParams& p);

/// Average over couplings and z; replica r uses rng.substream(r).
FreeEnergyEstimate mean_enriched_free_energy(const ModelSpec& spec, double t, double h1, double h2,
                                             int n_samples, const RandomStream& rng);

/// (1/N) log E[Z^n] from the exact replica sum.
double replica_moment_exact(const ModelSpec& spec, double beta, int n);

struct DerivativeCheck {
    double residual_t = 0.0;
    double residual_h = 0.0;
    double d_t = 0.0;             // finite-difference dF/dt
    double d_h = 0.0;             // finite-difference dF/dh (first layer for bipartite)
    double gibbs_t = 0.0;         // E<xi(R)>, or E<R1 R2> for bipartite
    double gibbs_h = 0.0;         // E<R>, or E<R1> for bipartite
    double variance = 0.0;        // E<R^2> - (E<R>)^2 for single-type
    double free_energy = 0.0;
    int field_rank = 0;
};

/// Compares finite differences of the quadrature-exact enriched free energy with
/// Gibbs averages computed by the same quadrature. Bipartite samples use h1 = h2 = h.
DerivativeCheck derivative_identity_check(const ModelSpec& spec, double t, double h, int quad_order);

struct GibbsMoments {
    double mean_overlap = 0.0;       // <sigma.sigma'/N>
    double mean_sq_overlap = 0.0;    // <(sigma.sigma'/N)^2>
    std::vector<double> magnetization;
};

/// Single-sample overlap moments from the Gibbs mean vector and correlation matrix.
GibbsMoments gibbs_overlap_moments(const CouplingSample& c, double beta);

/// Energy of every configuration, indexed as decode_configuration.
std::vector<double> energy_table(const CouplingSample& c);

}  // namespace spinglass
