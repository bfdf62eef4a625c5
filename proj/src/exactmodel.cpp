#include "spinglass/exactmodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "spinglass/energy.hpp"
#include "spinglass/kernels.hpp"
#include "spinglass/quadrature.hpp"

namespace spinglass {

namespace {

void check_single_cap(int length)
{
    if (length > kSingleTypeCap)
        throw std::invalid_argument("enumeration too large: configuration length above " +
                                    std::to_string(kSingleTypeCap));
}

void check_bipartite_cap(int n)
{
    if (n > kBipartiteCap)
        throw std::invalid_argument("enumeration too large: bipartite N above " +
                                    std::to_string(kBipartiteCap));
}

double sample_xi_one(const CouplingSample& c)
{
    if (c.is_sk() || c.is_bipartite())
        return 1.0;
    double acc = 0.0;
    for (const auto& t : c.pspin().tensors)
        acc += t.weight * t.weight;
    return acc;
}

double spin_of(std::uint64_t index, std::size_t i) { return ((index >> i) & 1u) ? -1.0 : 1.0; }

}  // namespace

FreeEnergyEstimate summarize(const std::vector<double>& values, int n, std::vector<double> parameters)
{
    if (values.empty())
        throw std::invalid_argument("no samples");
    FreeEnergyEstimate est;
    est.n_samples = static_cast<int>(values.size());
    est.n = n;
    est.parameters = std::move(parameters);
    double sum = 0.0;
    for (double v : values)
        sum += v;
    est.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - est.mean) * (v - est.mean);
        const double var = ss / static_cast<double>(values.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return est;
}

std::vector<double> energy_table(const CouplingSample& c)
{
    check_single_cap(c.config_length());
    std::vector<double> table(std::size_t{1} << c.config_length());
    kernels::omp::energy_table(c, table);
    return table;
}

double free_energy_sample(const CouplingSample& c, double beta)
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and nonnegative");
    const double n = c.n();
    if (c.is_bipartite()) {
        check_bipartite_cap(c.n());
        const auto nn = static_cast<std::size_t>(c.n());
        std::vector<double> zero(nn, 0.0);
        std::vector<double> layer(std::size_t{1} << nn);
        kernels::omp::bipartite_layer_sums(c, beta, zero, zero, layer);
        return kernels::omp::log_sum_exp(layer) / n;
    }
    const auto table = energy_table(c);
    return kernels::omp::log_sum_exp(table, beta) / n;
}

FreeEnergyEstimate mean_free_energy(const ModelSpec& spec, double beta, int n_samples,
                                    const RandomStream& rng)
{
    if (n_samples < 2)
        throw std::invalid_argument("mean_free_energy needs at least 2 samples");
    std::vector<double> values(static_cast<std::size_t>(n_samples));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n_samples; ++r) {
        auto stream = rng.substream(static_cast<std::uint64_t>(r));
        const auto c = sample_couplings(spec, stream);
        values[static_cast<std::size_t>(r)] = free_energy_sample(c, beta);
    }
    return summarize(values, spec.n(), {beta});
}

MaxResult max_energy(const CouplingSample& c, MaxMethod method)
{
    const auto length = static_cast<std::size_t>(c.config_length());
    const double n = c.n();
    MaxResult result;
    switch (method) {
    case MaxMethod::exhaustive: {
        const auto table = energy_table(c);
        const auto best = std::max_element(table.begin(), table.end());
        result.value = *best / n;
        result.argmax = decode_configuration(static_cast<std::uint64_t>(best - table.begin()),
                                             c.config_length());
        return result;
    }
    case MaxMethod::greedy: {
        // Unfixed spins are zero, so H only sees the already fixed part.
        Configuration sigma(length, 0);
        for (std::size_t k = 0; k < length; ++k) {
            sigma[k] = 1;
            const double up = hamiltonian(c, sigma);
            sigma[k] = -1;
            const double down = hamiltonian(c, sigma);
            sigma[k] = up >= down ? Spin{1} : Spin{-1};
        }
        result.value = hamiltonian(c, sigma) / n;
        result.argmax = std::move(sigma);
        return result;
    }
    case MaxMethod::local_search: {
        FieldState state(c, Configuration(length, 1));
        for (;;) {
            int best = -1;
            double gain = 1e-12;
            for (std::size_t k = 0; k < length; ++k) {
                const double d = state.flip_delta(static_cast<int>(k));
                if (d > gain) {
                    gain = d;
                    best = static_cast<int>(k);
                }
            }
            if (best < 0)
                break;
            state.flip(best);
        }
        state.refresh();
        result.value = state.energy() / n;
        result.argmax = state.configuration();
        return result;
    }
    }
    throw std::invalid_argument("unknown maximization method");
}

double enriched_free_energy_sample(const CouplingSample& c, const EnrichedParams& p)
{
    if (!(p.t >= 0.0) || !(p.h1 >= 0.0) || !(p.h2 >= 0.0))
        throw std::invalid_argument("enriched parameters t and h must be nonnegative");
    if (p.z.size() != static_cast<std::size_t>(c.config_length()))
        throw std::invalid_argument("external field length does not match the configuration");
    const double n = c.n();
    const double st = std::sqrt(2.0 * p.t);
    if (c.is_bipartite()) {
        check_bipartite_cap(c.n());
        const auto nn = static_cast<std::size_t>(c.n());
        std::vector<double> f1(nn);
        std::vector<double> f2(nn);
        for (std::size_t i = 0; i < nn; ++i) {
            f1[i] = std::sqrt(2.0 * p.h1) * p.z[i];
            f2[i] = std::sqrt(2.0 * p.h2) * p.z[nn + i];
        }
        std::vector<double> layer(std::size_t{1} << nn);
        kernels::omp::bipartite_layer_sums(c, st, f1, f2, layer);
        const double log_z = kernels::omp::log_sum_exp(layer);
        return -(log_z - n * p.t - n * p.h1 - n * p.h2) / n;
    }
    auto table = energy_table(c);
    const double sh = std::sqrt(2.0 * p.h1);
    const auto length = static_cast<std::size_t>(c.config_length());
    const auto size = static_cast<std::int64_t>(table.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < size; ++idx) {
        const auto u = static_cast<std::uint64_t>(idx);
        double zs = 0.0;
        for (std::size_t i = 0; i < length; ++i)
            zs += p.z[i] * spin_of(u, i);
        auto& e = table[static_cast<std::size_t>(idx)];
        e = st * e + sh * zs;
    }
    const double log_z = kernels::omp::log_sum_exp(table);
    return -(log_z - n * p.t * sample_xi_one(c) - n * p.h1) / n;
}

FreeEnergyEstimate mean_enriched_free_energy(const ModelSpec& spec, double t, double h1, double h2,
                                             int n_samples, const RandomStream& rng)
{
    if (n_samples < 2)
        throw std::invalid_argument("mean_enriched_free_energy needs at least 2 samples");
    std::vector<double> values(static_cast<std::size_t>(n_samples));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n_samples; ++r) {
        auto stream = rng.substream(static_cast<std::uint64_t>(r));
        const auto c = sample_couplings(spec, stream);
        EnrichedParams p{t, h1, h2, std::vector<double>(static_cast<std::size_t>(spec.config_length()))};
        for (auto& z : p.z)
            z = stream.gaussian();
        values[static_cast<std::size_t>(r)] = enriched_free_energy_sample(c, p);
    }
    return summarize(values, spec.n(), {t, h1, h2});
}

double replica_moment_exact(const ModelSpec& spec, double beta, int n)
{
    if (n < 1)
        throw std::invalid_argument("replica count must be positive");
    const int length = spec.config_length();
    if (n * length > kReplicaCap)
        throw std::invalid_argument("enumeration too large: n * config_length above " +
                                    std::to_string(kReplicaCap));
    const auto l = static_cast<unsigned>(length);
    const std::uint64_t mask = (std::uint64_t{1} << l) - 1;
    const std::uint64_t half = (std::uint64_t{1} << (l / 2)) - 1;
    const double nn = spec.n();
    const auto& xi = spec.mixture();

    auto covariance = [&](std::uint64_t a, std::uint64_t b) {
        const std::uint64_t d = a ^ b;
        if (spec.is_bipartite()) {
            const double r1 = (nn - 2.0 * std::popcount(d & half)) / nn;
            const double r2 = (nn - 2.0 * std::popcount((d >> (l / 2)) & half)) / nn;
            return nn * r1 * r2;
        }
        return nn * xi((nn - 2.0 * std::popcount(d)) / nn);
    };

    const std::size_t size = std::size_t{1} << (static_cast<unsigned>(n) * l);
    std::vector<double> exponent(size);
    const auto total = static_cast<std::int64_t>(size);
#pragma omp parallel for schedule(static)
    for (std::int64_t idx = 0; idx < total; ++idx) {
        const auto u = static_cast<std::uint64_t>(idx);
        double acc = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                acc += covariance((u >> (a * length)) & mask, (u >> (b * length)) & mask);
        exponent[static_cast<std::size_t>(idx)] = 0.5 * beta * beta * acc;
    }
    return kernels::omp::log_sum_exp(exponent) / nn;
}

namespace {

// Gaussian model reduced to the sigma-dependent part of the field plus external fields.
struct QuadratureModel {
    bool bipartite = false;
    int n = 0;
    int length = 0;
    double xi_one = 1.0;
    Mixture xi = Mixture::sk();
    std::vector<std::vector<double>> modes;  // sqrt(lambda_k) u_k over configurations
};

QuadratureModel reduce(const ModelSpec& spec)
{
    QuadratureModel m;
    m.bipartite = spec.is_bipartite();
    m.n = spec.n();
    m.length = spec.config_length();
    m.xi_one = spec.xi_at_one();
    m.xi = spec.mixture();
    const int k = 1 << m.length;
    Eigen::MatrixXd cov(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            cov(a, b) = expected_covariance(spec, decode_configuration(static_cast<std::uint64_t>(a), m.length),
                                            decode_configuration(static_cast<std::uint64_t>(b), m.length));
    // A field component that is constant over configurations has zero mean and
    // shifts log Z linearly, so it drops out of the expectation.
    const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(k, k) - Eigen::MatrixXd::Constant(k, k, 1.0 / k);
    const Eigen::MatrixXd centered = p * cov * p;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
    const double top = solver.eigenvalues().maxCoeff();
    for (int e = 0; e < k; ++e) {
        const double lambda = solver.eigenvalues()(e);
        if (lambda <= 1e-10 * std::max(top, 1.0))
            continue;
        std::vector<double> mode(static_cast<std::size_t>(k));
        for (int a = 0; a < k; ++a)
            mode[static_cast<std::size_t>(a)] = std::sqrt(lambda) * solver.eigenvectors()(a, e);
        m.modes.push_back(std::move(mode));
    }
    return m;
}

struct QuadratureAverages {
    double free_energy = 0.0;
    double pair_t = 0.0;    // E<xi(R)> or E<R1 R2>
    double overlap1 = 0.0;  // E<R> or E<R1>
    double overlap2 = 0.0;  // E<R2>
    double overlap_sq = 0.0;
};

QuadratureAverages quadrature_average(const QuadratureModel& m, double t, double h1, double h2,
                                      int order, bool with_gibbs)
{
    const auto& rule = normal_rule(order);
    const auto k = static_cast<std::size_t>(1) << m.length;
    const std::size_t rank = m.modes.size();
    const std::size_t dims = rank + static_cast<std::size_t>(m.length);
    const auto q = static_cast<std::size_t>(order);
    std::size_t inner = 1;
    for (std::size_t d = 1; d < dims; ++d)
        inner *= q;
    const double n = m.n;
    const double st = std::sqrt(2.0 * t);
    const auto layer = static_cast<std::size_t>(m.bipartite ? m.n : m.length);

    std::vector<double> field_scale(static_cast<std::size_t>(m.length));
    for (std::size_t i = 0; i < field_scale.size(); ++i)
        field_scale[i] = std::sqrt(2.0 * (m.bipartite && i >= layer ? h2 : h1));

    // Overlap tables per configuration pair.
    std::vector<double> r1(k * k);
    std::vector<double> r2(k * k);
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            const std::uint64_t d = a ^ b;
            const std::uint64_t lo = (std::uint64_t{1} << layer) - 1;
            r1[a * k + b] = (static_cast<double>(layer) - 2.0 * std::popcount(d & lo)) / static_cast<double>(layer);
            r2[a * k + b] = m.bipartite ? (n - 2.0 * std::popcount(d >> layer)) / n : 0.0;
        }

    std::vector<QuadratureAverages> partial(q);
#pragma omp parallel for schedule(static)
    for (std::int64_t first = 0; first < static_cast<std::int64_t>(q); ++first) {
        std::vector<double> y(dims);
        std::vector<double> e(k);
        std::vector<double> g(k);
        QuadratureAverages acc;
        for (std::size_t rest = 0; rest < inner; ++rest) {
            double w = rule.weights[static_cast<std::size_t>(first)];
            y[0] = rule.nodes[static_cast<std::size_t>(first)];
            std::size_t code = rest;
            for (std::size_t d = 1; d < dims; ++d) {
                const std::size_t digit = code % q;
                code /= q;
                y[d] = rule.nodes[digit];
                w *= rule.weights[digit];
            }
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < k; ++a) {
                double h = 0.0;
                for (std::size_t r = 0; r < rank; ++r)
                    h += m.modes[r][a] * y[r];
                double zs = 0.0;
                for (std::size_t i = 0; i < static_cast<std::size_t>(m.length); ++i)
                    zs += field_scale[i] * y[rank + i] * spin_of(a, i);
                e[a] = st * h + zs;
                top = std::max(top, e[a]);
            }
            double z = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                g[a] = std::exp(e[a] - top);
                z += g[a];
            }
            acc.free_energy += w * (top + std::log(z));
            if (!with_gibbs)
                continue;
            for (auto& v : g)
                v /= z;
            double pt = 0.0;
            double o1 = 0.0;
            double o2 = 0.0;
            double osq = 0.0;
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b) {
                    const double gg = g[a] * g[b];
                    const double x1 = r1[a * k + b];
                    const double x2 = r2[a * k + b];
                    pt += gg * (m.bipartite ? x1 * x2 : m.xi(x1));
                    o1 += gg * x1;
                    o2 += gg * x2;
                    osq += gg * x1 * x1;
                }
            acc.pair_t += w * pt;
            acc.overlap1 += w * o1;
            acc.overlap2 += w * o2;
            acc.overlap_sq += w * osq;
        }
        partial[static_cast<std::size_t>(first)] = acc;
    }
    QuadratureAverages total;
    for (const auto& p : partial) {
        total.free_energy += p.free_energy;
        total.pair_t += p.pair_t;
        total.overlap1 += p.overlap1;
        total.overlap2 += p.overlap2;
        total.overlap_sq += p.overlap_sq;
    }
    const double shift = m.bipartite ? n * (t + h1 + h2) : n * (t * m.xi_one + h1);
    total.free_energy = -(total.free_energy - shift) / n;
    return total;
}

// Richardson-extrapolated derivative; one-sided stencils keep the argument nonnegative.
template <class F>
double derivative(F&& f, double x, double delta)
{
    auto central = [&](double d) { return (f(x + d) - f(x - d)) / (2.0 * d); };
    auto forward = [&](double d) { return (-3.0 * f(x) + 4.0 * f(x + d) - f(x + 2.0 * d)) / (2.0 * d); };
    if (x >= delta)
        return (4.0 * central(0.5 * delta) - central(delta)) / 3.0;
    return (4.0 * forward(0.5 * delta) - forward(delta)) / 3.0;
}

}  // namespace

DerivativeCheck derivative_identity_check(const ModelSpec& spec, double t, double h, int quad_order)
{
    if (quad_order < 5)
        throw std::invalid_argument("quadrature order must be at least 5");
    if (!(t >= 0.0) || !(h >= 0.0))
        throw std::invalid_argument("t and h must be nonnegative");
    if (spec.is_bipartite() ? spec.n() != 1 : spec.n() > 2)
        throw std::invalid_argument("derivative check needs N <= 2 (single-type) or N = 1 (bipartite)");
    const auto model = reduce(spec);
    constexpr double delta = 1e-4;

    const auto at = quadrature_average(model, t, h, h, quad_order, true);
    auto f_t = [&](double x) { return quadrature_average(model, x, h, h, quad_order, false).free_energy; };
    auto f_h = [&](double x) { return quadrature_average(model, t, x, h, quad_order, false).free_energy; };

    DerivativeCheck out;
    out.field_rank = static_cast<int>(model.modes.size());
    out.free_energy = at.free_energy;
    out.d_t = derivative(f_t, t, delta);
    out.d_h = derivative(f_h, h, delta);
    out.gibbs_t = at.pair_t;
    out.gibbs_h = at.overlap1;
    out.residual_t = std::abs(out.d_t - out.gibbs_t);
    out.residual_h = std::abs(out.d_h - out.gibbs_h);
    if (spec.is_bipartite()) {
        auto f_h2 = [&](double x) { return quadrature_average(model, t, h, x, quad_order, false).free_energy; };
        out.residual_h = std::max(out.residual_h, std::abs(derivative(f_h2, h, delta) - at.overlap2));
    } else {
        out.variance = at.overlap_sq - at.overlap1 * at.overlap1;
    }
    return out;
}

GibbsMoments gibbs_overlap_moments(const CouplingSample& c, double beta)
{
    const auto table = energy_table(c);
    const double log_z = kernels::omp::log_sum_exp(table, beta);
    const auto length = static_cast<std::size_t>(c.config_length());
    std::vector<double> mean(length, 0.0);
    std::vector<double> corr(length * length, 0.0);
    for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
        const double g = std::exp(beta * table[idx] - log_z);
        for (std::size_t i = 0; i < length; ++i) {
            const double si = spin_of(idx, i);
            mean[i] += g * si;
            for (std::size_t j = 0; j < length; ++j)
                corr[i * length + j] += g * si * spin_of(idx, j);
        }
    }
    const double l = static_cast<double>(length);
    GibbsMoments out;
    for (double m : mean)
        out.mean_overlap += m * m;
    out.mean_overlap /= l;
    for (double v : corr)
        out.mean_sq_overlap += v * v;
    out.mean_sq_overlap /= l * l;
    out.magnetization = std::move(mean);
    return out;
}

}  // namespace spinglass
