#include "spinglass/model.hpp"

#include <cmath>
#include <stdexcept>

namespace spinglass {

ModelSpec::ModelSpec(ModelKind kind, Mixture mixture, int n)
    : kind_(kind), mixture_(std::move(mixture)), n_(n)
{
    if (n < 1)
        throw std::invalid_argument("N must be at least 1");
}

ModelSpec ModelSpec::sk(int n) { return ModelSpec(ModelKind::single_type, Mixture::sk(), n); }

ModelSpec ModelSpec::single_type(Mixture mixture, int n)
{
    return ModelSpec(ModelKind::single_type, std::move(mixture), n);
}

ModelSpec ModelSpec::bipartite(int n) { return ModelSpec(ModelKind::bipartite, Mixture::sk(), n); }

double ModelSpec::xi_at_one() const { return is_bipartite() ? 1.0 : mixture_(1.0); }

std::string ModelSpec::name() const
{
    if (is_bipartite())
        return "bipartite";
    return mixture_.is_sk() ? "sk" : "pspin";
}

CouplingSample::CouplingSample(int n, Variant couplings) : n_(n), data_(std::move(couplings))
{
    if (n < 1)
        throw std::invalid_argument("N must be at least 1");
    const auto nn = static_cast<std::size_t>(n);
    auto check_entries = [](const std::vector<double>& v, std::size_t expected) {
        if (v.size() != expected)
            throw std::invalid_argument("coupling dimensions do not match N");
        for (double x : v)
            if (!std::isfinite(x))
                throw std::invalid_argument("coupling entries must be finite");
    };
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, PSpinCouplings>) {
                for (const auto& t : c.tensors) {
                    std::size_t size = 1;
                    for (int k = 0; k < t.order; ++k)
                        size *= nn;
                    check_entries(t.entries, size);
                }
            } else {
                check_entries(c.w, nn * nn);
            }
        },
        data_);
}

CouplingSample CouplingSample::sk(int n, std::vector<double> w)
{
    return CouplingSample(n, SkCouplings{std::move(w)});
}

CouplingSample CouplingSample::bipartite(int n, std::vector<double> w)
{
    return CouplingSample(n, BipartiteCouplings{std::move(w)});
}

std::span<const double> CouplingSample::matrix() const
{
    if (const auto* sk = std::get_if<SkCouplings>(&data_))
        return sk->w;
    if (const auto* bip = std::get_if<BipartiteCouplings>(&data_))
        return bip->w;
    throw std::logic_error("p-spin sample has no single coupling matrix");
}

const PSpinCouplings& CouplingSample::pspin() const { return std::get<PSpinCouplings>(data_); }

namespace {

std::vector<double> gaussian_vector(std::size_t size, RandomStream& rng)
{
    std::vector<double> v(size);
    for (auto& x : v)
        x = rng.gaussian();
    return v;
}

}  // namespace

CouplingSample sample_couplings(const ModelSpec& spec, RandomStream& rng)
{
    const int n = spec.n();
    const auto nn = static_cast<std::size_t>(n);
    if (spec.is_bipartite())
        return CouplingSample::bipartite(n, gaussian_vector(nn * nn, rng));
    if (spec.mixture().is_sk())
        return CouplingSample::sk(n, gaussian_vector(nn * nn, rng));

    PSpinCouplings pspin;
    for (int p = 1; p <= spec.mixture().degree(); ++p) {
        const double a = spec.mixture().coefficient(p);
        if (a <= 0.0)
            continue;
        std::size_t size = 1;
        for (int k = 0; k < p; ++k)
            size *= nn;
        pspin.tensors.push_back({p, std::sqrt(a), gaussian_vector(size, rng)});
    }
    return CouplingSample(n, std::move(pspin));
}

double expected_covariance(const ModelSpec& spec, std::span<const Spin> sigma,
                           std::span<const Spin> tau)
{
    const auto length = static_cast<std::size_t>(spec.config_length());
    if (sigma.size() != length || tau.size() != length)
        throw std::invalid_argument("configuration length does not match the model");
    const double n = spec.n();
    auto dot = [&](std::size_t begin, std::size_t end) {
        long acc = 0;
        for (std::size_t i = begin; i < end; ++i)
            acc += sigma[i] * tau[i];
        return static_cast<double>(acc);
    };
    if (spec.is_bipartite()) {
        const auto nn = static_cast<std::size_t>(spec.n());
        return n * (dot(0, nn) / n) * (dot(nn, 2 * nn) / n);
    }
    return n * spec.mixture()(dot(0, length) / n);
}

Configuration decode_configuration(std::uint64_t index, int length)
{
    Configuration sigma(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i)
        sigma[static_cast<std::size_t>(i)] = ((index >> i) & 1u) ? Spin{-1} : Spin{1};
    return sigma;
}

std::uint64_t encode_configuration(std::span<const Spin> sigma)
{
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] < 0)
            index |= std::uint64_t{1} << i;
    return index;
}

}  // namespace spinglass
