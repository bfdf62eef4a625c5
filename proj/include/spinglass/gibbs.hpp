#pragma once

#include <span>
#include <utility>
#include <vector>

#include "spinglass/model.hpp"
#include "spinglass/random.hpp"

namespace spinglass {

enum class SamplingMode { exact, mcmc };

struct McmcOptions {
    long sweeps = 10000;
    int n_replicas = 2;
    double burn_in_fraction = 0.2;
    int thin = 1;            // sweeps between recorded samples
    bool tempering = false;  // geometric ladder from 0.2 beta to beta
    int rungs = 8;
};

/// Recorded configurations, stored flat as [sample][replica][spin].
struct ReplicaSamples {
    int n_replicas = 0;
    int length = 0;
    std::vector<Spin> data;
    double acceptance_rate = 0.0;
    double swap_rate = 0.0;

    std::size_t n_samples() const noexcept
    {
        const auto stride = static_cast<std::size_t>(n_replicas) * static_cast<std::size_t>(length);
        return stride == 0 ? 0 : data.size() / stride;
    }
    std::span<const Spin> configuration(std::size_t sample, int replica) const noexcept
    {
        const auto l = static_cast<std::size_t>(length);
        return {data.data() + (sample * static_cast<std::size_t>(n_replicas) + static_cast<std::size_t>(replica)) * l, l};
    }
};

/// Independent Metropolis chains, one per replica, on the same coupling sample.
/// Replica r draws from rng.substream(r).
ReplicaSamples mcmc_chain(const CouplingSample& c, double beta, const McmcOptions& opts,
                          const RandomStream& rng);

struct OverlapStats {
    std::vector<double> edges;  // bins.size() + 1 edges on [-1, 1]
    std::vector<double> mass;
    double first_moment = 0.0;
    double second_moment = 0.0;
    double first_std_error = 0.0;  // zero in exact mode
    double second_std_error = 0.0;
    SamplingMode mode = SamplingMode::exact;
};

inline constexpr int kOverlapExactCap = 13;
inline constexpr int kTripleExactCap = 8;

/// Overlap law of two replicas; one bin per attainable value of sigma.sigma'/length.
OverlapStats overlap_distribution_exact(const CouplingSample& c, double beta);
OverlapStats overlap_distribution_mcmc(const CouplingSample& c, double beta, const McmcOptions& opts,
                                       const RandomStream& rng);
/// Overlap statistics of replicas 0 and 1.
OverlapStats overlap_from_samples(const ReplicaSamples& samples);

/// Total variation distance between two histograms on the same bins.
double total_variation(const OverlapStats& a, const OverlapStats& b);

struct TripleDefectStats {
    double epsilon = 0.0;
    double violation_fraction = 0.0;
    double violation_std_error = 0.0;  // zero in exact mode
    std::vector<std::pair<double, double>> quantiles;  // (0.5, q50), (0.9, q90), (0.99, q99)
    SamplingMode mode = SamplingMode::exact;
};

/// Largest minus second-largest pairwise distance among three configurations, over sqrt(length).
double ultrametric_defect(std::span<const Spin> a, std::span<const Spin> b, std::span<const Spin> c);

TripleDefectStats ultrametric_defects_exact(const CouplingSample& c, double beta, double epsilon);
TripleDefectStats ultrametric_defects_mcmc(const CouplingSample& c, double beta, double epsilon,
                                           McmcOptions opts, const RandomStream& rng);
/// Defect statistics of replicas 0, 1 and 2.
TripleDefectStats defects_from_samples(const ReplicaSamples& samples, double epsilon);

/// sum_k e_k exp(-beta e_k) / sum_k exp(-beta e_k).
double mean_energy(std::span<const double> levels, double beta);
/// The beta with mean_energy(levels, beta) = target.
double inverse_temperature(std::span<const double> levels, double target);

/// Batch-means standard error of the mean of a correlated series.
double batch_standard_error(std::span<const double> series, int batches = 32);

}  // namespace spinglass
