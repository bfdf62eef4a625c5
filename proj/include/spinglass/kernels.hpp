#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// straightforward reference kept for testing, `omp` is the OpenMP version
// used by the library. OpenMP reductions run over fixed-size blocks that are
// combined in index order, so `omp` results do not depend on the thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "spinglass/model.hpp"

namespace spinglass::kernels {

/// Block size of every blocked reduction.
inline constexpr std::size_t kBlock = 4096;

/// Triple-overlap mass table indexed by Hamming distances (d_ab, d_ac, d_bc).
struct TripleTable {
    int length = 0;
    std::vector<double> mass;  // (length+1)^3 entries
    double& at(int a, int b, int c)
    {
        const auto l = static_cast<std::size_t>(length + 1);
        return mass[(static_cast<std::size_t>(a) * l + static_cast<std::size_t>(b)) * l +
                    static_cast<std::size_t>(c)];
    }
    double at(int a, int b, int c) const
    {
        const auto l = static_cast<std::size_t>(length + 1);
        return mass[(static_cast<std::size_t>(a) * l + static_cast<std::size_t>(b)) * l +
                    static_cast<std::size_t>(c)];
    }
};

/// Precomputed Gauss-Hermite rule for a standard normal, used by cascade_step.
struct NormalRule {
    std::vector<double> nodes;
    std::vector<double> weights;  // sum to 1
};

/// Uniform grid function with values and x-derivatives; linear extrapolation outside.
struct GridTable {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<double> value;
    std::vector<double> slope;

    std::size_t size() const noexcept { return value.size(); }
    double x(std::size_t i) const noexcept { return x0 + dx * static_cast<double>(i); }
};

namespace serial {

/// out[c] = H(decode_configuration(c)) for every c < 2^config_length.
void energy_table(const CouplingSample& c, std::span<double> out);
/// log sum_i exp(scale * x_i).
double log_sum_exp(std::span<const double> x, double scale = 1.0);
/// out[c] = log sum_{sigma_2} exp(scale H(sigma_1(c), sigma_2) + f1.sigma_1 + f2.sigma_2).
void bipartite_layer_sums(const CouplingSample& c, double scale, std::span<const double> field1,
                          std::span<const double> field2, std::span<double> out);
/// out[d] = sum_s g[s] g[s xor d].
void xor_autocorrelation(std::span<const double> g, std::span<double> out);
/// Gibbs mass of replica triples by pairwise Hamming distances.
TripleTable triple_distances(std::span<const double> g, int length);
/// One backward cascade step: lower(x) = (1/zeta) log E exp(zeta upper(x + sd Z)).
/// upper == nullptr means the terminal log cosh.
void cascade_step(const GridTable* upper, double sd, double zeta, const NormalRule& rule,
                  GridTable& lower);

}  // namespace serial

namespace omp {

void energy_table(const CouplingSample& c, std::span<double> out);
double log_sum_exp(std::span<const double> x, double scale = 1.0);
void bipartite_layer_sums(const CouplingSample& c, double scale, std::span<const double> field1,
                          std::span<const double> field2, std::span<double> out);
void xor_autocorrelation(std::span<const double> g, std::span<double> out);
TripleTable triple_distances(std::span<const double> g, int length);
void cascade_step(const GridTable* upper, double sd, double zeta, const NormalRule& rule,
                  GridTable& lower);

}  // namespace omp

/// Cubic Hermite evaluation of a grid table (value and derivative).
void evaluate(const GridTable& t, double x, double& value, double& slope);
/// log cosh(x) evaluated without overflow.
double log_cosh(double x);

}  // namespace spinglass::kernels
