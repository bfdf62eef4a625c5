#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spinglass/mixture.hpp"
#include "spinglass/random.hpp"

namespace spinglass {

using Spin = std::int8_t;
/// Spins in {-1, +1}. Bipartite configurations store sigma_1 then sigma_2.
using Configuration = std::vector<Spin>;

enum class ModelKind { single_type, bipartite };

/// Model specification: single-type with covariance mixture xi, or bipartite.
class ModelSpec {
public:
    static ModelSpec sk(int n);
    static ModelSpec single_type(Mixture mixture, int n);
    static ModelSpec bipartite(int n);

    ModelKind kind() const noexcept { return kind_; }
    int n() const noexcept { return n_; }
    /// Ignored for bipartite models.
    const Mixture& mixture() const noexcept { return mixture_; }
    bool is_bipartite() const noexcept { return kind_ == ModelKind::bipartite; }
    /// N for single-type models, 2N for bipartite ones.
    int config_length() const noexcept { return is_bipartite() ? 2 * n_ : n_; }
    /// xi(1): 1 for the bipartite covariance (1)(1).
    double xi_at_one() const;
    std::string name() const;

private:
    ModelSpec(ModelKind kind, Mixture mixture, int n);

    ModelKind kind_;
    Mixture mixture_;
    int n_;
};

/// SK disorder: H(s) = N^{-1/2} sum_ij W_ij s_i s_j. W is row-major N x N.
struct SkCouplings {
    std::vector<double> w;
};

/// Order-p Gaussian tensor with weight sqrt(a_p). Entries are row-major N^p.
struct CouplingTensor {
    int order = 0;
    double weight = 0.0;
    std::vector<double> entries;
};

/// Mixed p-spin disorder: H(s) = sum_p sqrt(a_p) N^{(1-p)/2} sum J s_i1...s_ip.
struct PSpinCouplings {
    std::vector<CouplingTensor> tensors;
};

/// Bipartite disorder: H(s) = N^{-1/2} sum_ij W_ij s_{1,i} s_{2,j}.
struct BipartiteCouplings {
    std::vector<double> w;
};

/// One realization of the Gaussian disorder.
class CouplingSample {
public:
    using Variant = std::variant<SkCouplings, PSpinCouplings, BipartiteCouplings>;

    CouplingSample(int n, Variant couplings);

    /// SK sample from an explicit row-major matrix.
    static CouplingSample sk(int n, std::vector<double> w);
    static CouplingSample bipartite(int n, std::vector<double> w);

    int n() const noexcept { return n_; }
    int config_length() const noexcept { return is_bipartite() ? 2 * n_ : n_; }
    bool is_bipartite() const noexcept { return std::holds_alternative<BipartiteCouplings>(data_); }
    bool is_sk() const noexcept { return std::holds_alternative<SkCouplings>(data_); }
    const Variant& data() const noexcept { return data_; }

    /// Matrix of SK or bipartite samples. Throws for p-spin samples.
    std::span<const double> matrix() const;
    const PSpinCouplings& pspin() const;

private:
    int n_;
    Variant data_;
};

/// Draws one disorder realization. Single-type models whose mixture is exactly
/// r^2 produce an SK matrix; other mixtures produce one tensor per a_p > 0.
CouplingSample sample_couplings(const ModelSpec& spec, RandomStream& rng);

/// E[H(sigma) H(tau)]: N xi(sigma.tau/N), or N (s1.t1/N)(s2.t2/N) for bipartite.
double expected_covariance(const ModelSpec& spec, std::span<const Spin> sigma,
                           std::span<const Spin> tau);

/// Configuration encoded by the low config_length bits of index: bit i set means spin -1.
Configuration decode_configuration(std::uint64_t index, int length);
std::uint64_t encode_configuration(std::span<const Spin> sigma);

}  // namespace spinglass
