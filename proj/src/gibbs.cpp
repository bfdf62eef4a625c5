#include "spinglass/gibbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinglass/energy.hpp"
#include "spinglass/exactmodel.hpp"
#include "spinglass/kernels.hpp"

namespace spinglass {

namespace {

struct ChainResult {
    std::vector<Spin> recorded;  // flat, one configuration per record
    long accepted = 0;
    long proposed = 0;
    long swaps = 0;
    long swap_attempts = 0;
};

// Sites are visited in order and each proposes its flip with probability 1/2.
// The lazy proposal keeps the chain aperiodic: at beta = 0 plain sequential
// Metropolis would flip every spin on every sweep.
void metropolis_sweep(FieldState& state, double beta, RandomStream& rng, long& accepted, long& proposed)
{
    const int length = static_cast<int>(state.configuration().size());
    std::uint64_t coins = 0;
    for (int k = 0; k < length; ++k) {
        if (k % 64 == 0)
            coins = rng.bits();
        const bool propose = (coins >> (k % 64)) & 1u;
        if (!propose)
            continue;
        ++proposed;
        const double delta = state.flip_delta(k);
        if (delta >= 0.0 || rng.uniform() < std::exp(beta * delta)) {
            state.flip(k);
            ++accepted;
        }
    }
}

Configuration random_configuration(int length, RandomStream& rng)
{
    Configuration sigma(static_cast<std::size_t>(length));
    for (auto& s : sigma)
        s = static_cast<Spin>(rng.spin());
    return sigma;
}

ChainResult run_chain(const CouplingSample& c, double beta, const McmcOptions& opts, RandomStream rng)
{
    const int length = c.config_length();
    const long burn_in = static_cast<long>(opts.burn_in_fraction * static_cast<double>(opts.sweeps));
    const bool temper = opts.tempering && beta > 0.0 && opts.rungs >= 2;
    const int rungs = temper ? opts.rungs : 1;

    std::vector<double> ladder(static_cast<std::size_t>(rungs), beta);
    for (int k = 0; k < rungs && temper; ++k)
        ladder[static_cast<std::size_t>(k)] =
            0.2 * beta * std::pow(5.0, static_cast<double>(k) / (rungs - 1));
    ladder.back() = beta;

    std::vector<FieldState> states;
    states.reserve(static_cast<std::size_t>(rungs));
    for (int k = 0; k < rungs; ++k)
        states.emplace_back(c, random_configuration(length, rng));

    ChainResult out;
    for (long sweep = 0; sweep < opts.sweeps; ++sweep) {
        for (int k = 0; k < rungs; ++k)
            metropolis_sweep(states[static_cast<std::size_t>(k)], ladder[static_cast<std::size_t>(k)], rng,
                             out.accepted, out.proposed);
        if (temper) {
            for (int k = static_cast<int>(sweep % 2); k + 1 < rungs; k += 2) {
                auto& a = states[static_cast<std::size_t>(k)];
                auto& b = states[static_cast<std::size_t>(k + 1)];
                const double log_acc = (ladder[static_cast<std::size_t>(k)] - ladder[static_cast<std::size_t>(k + 1)]) *
                                       (b.energy() - a.energy());
                ++out.swap_attempts;
                if (log_acc >= 0.0 || rng.uniform() < std::exp(log_acc)) {
                    std::swap(a, b);
                    ++out.swaps;
                }
            }
        }
        if ((sweep + 1) % 1024 == 0)
            for (auto& s : states)
                s.refresh();
        if (sweep >= burn_in && (sweep - burn_in) % opts.thin == 0)
        {
            const auto& sigma = states.back().configuration();
            out.recorded.insert(out.recorded.end(), sigma.begin(), sigma.end());
        }
    }
    return out;
}

std::vector<double> attainable_overlaps(int length)
{
    std::vector<double> values(static_cast<std::size_t>(length + 1));
    for (int d = 0; d <= length; ++d)
        values[static_cast<std::size_t>(d)] = static_cast<double>(length - 2 * d) / length;
    std::reverse(values.begin(), values.end());
    return values;
}

OverlapStats empty_stats(int length, SamplingMode mode)
{
    OverlapStats s;
    s.mode = mode;
    s.mass.assign(static_cast<std::size_t>(length + 1), 0.0);
    s.edges.resize(static_cast<std::size_t>(length + 2));
    const double half = 1.0 / length;
    const auto values = attainable_overlaps(length);
    s.edges.front() = -1.0;
    s.edges.back() = 1.0;
    for (std::size_t b = 1; b + 1 < s.edges.size(); ++b)
        s.edges[b] = values[b - 1] + half;
    return s;
}

// Bin index of an overlap with Hamming distance d: bins run from -1 to 1.
std::size_t bin_of_distance(int length, int d) { return static_cast<std::size_t>(length - d); }

int hamming(std::span<const Spin> a, std::span<const Spin> b)
{
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d += a[i] != b[i];
    return d;
}

std::vector<double> gibbs_weights(const CouplingSample& c, double beta)
{
    auto table = energy_table(c);
    const double log_z = kernels::omp::log_sum_exp(table, beta);
    for (auto& e : table)
        e = std::exp(beta * e - log_z);
    return table;
}

double weighted_quantile(std::vector<std::pair<double, double>> values, double q)
{
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (const auto& v : values)
        total += v.second;
    double acc = 0.0;
    for (const auto& v : values) {
        acc += v.second;
        if (acc >= q * total - 1e-12)
            return v.first;
    }
    return values.empty() ? 0.0 : values.back().first;
}

constexpr double kQuantiles[] = {0.5, 0.9, 0.99};
constexpr double kTie = 1e-12;

void check_beta(double beta)
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and nonnegative");
}

}  // namespace

ReplicaSamples mcmc_chain(const CouplingSample& c, double beta, const McmcOptions& opts,
                          const RandomStream& rng)
{
    check_beta(beta);
    if (opts.sweeps < 1)
        throw std::invalid_argument("sweeps must be at least 1");
    if (opts.n_replicas < 2 || opts.n_replicas > 3)
        throw std::invalid_argument("n_replicas must be 2 or 3");
    if (opts.thin < 1 || !(opts.burn_in_fraction >= 0.0 && opts.burn_in_fraction < 1.0))
        throw std::invalid_argument("thin must be positive and burn-in fraction in [0, 1)");

    std::vector<ChainResult> chains(static_cast<std::size_t>(opts.n_replicas));
#pragma omp parallel for schedule(static)
    for (int r = 0; r < opts.n_replicas; ++r)
        chains[static_cast<std::size_t>(r)] = run_chain(c, beta, opts, rng.substream(static_cast<std::uint64_t>(r)));

    ReplicaSamples out;
    out.n_replicas = opts.n_replicas;
    out.length = c.config_length();
    const auto l = static_cast<std::size_t>(out.length);
    const std::size_t n = chains.front().recorded.size() / l;
    out.data.reserve(n * l * static_cast<std::size_t>(opts.n_replicas));
    for (std::size_t s = 0; s < n; ++s)
        for (const auto& ch : chains) {
            const auto first = ch.recorded.begin() + static_cast<std::ptrdiff_t>(s * l);
            out.data.insert(out.data.end(), first, first + static_cast<std::ptrdiff_t>(l));
        }
    long accepted = 0;
    long proposed = 0;
    long swaps = 0;
    long attempts = 0;
    for (const auto& ch : chains) {
        accepted += ch.accepted;
        proposed += ch.proposed;
        swaps += ch.swaps;
        attempts += ch.swap_attempts;
    }
    out.acceptance_rate = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
    out.swap_rate = attempts > 0 ? static_cast<double>(swaps) / static_cast<double>(attempts) : 0.0;
    return out;
}

OverlapStats overlap_distribution_exact(const CouplingSample& c, double beta)
{
    check_beta(beta);
    const int length = c.config_length();
    if (length > kOverlapExactCap)
        throw std::invalid_argument("enumeration too large: exact overlap needs length <= " +
                                    std::to_string(kOverlapExactCap));
    const auto g = gibbs_weights(c, beta);
    std::vector<double> corr(g.size());
    kernels::omp::xor_autocorrelation(g, corr);
    auto stats = empty_stats(length, SamplingMode::exact);
    for (std::size_t d = 0; d < corr.size(); ++d)
        stats.mass[bin_of_distance(length, std::popcount(d))] += corr[d];
    const auto values = attainable_overlaps(length);
    for (std::size_t b = 0; b < values.size(); ++b) {
        stats.first_moment += stats.mass[b] * values[b];
        stats.second_moment += stats.mass[b] * values[b] * values[b];
    }
    return stats;
}

OverlapStats overlap_from_samples(const ReplicaSamples& samples)
{
    const int length = samples.length;
    auto stats = empty_stats(length, SamplingMode::mcmc);
    const std::size_t n = samples.n_samples();
    if (n == 0)
        throw std::invalid_argument("no recorded samples");
    std::vector<double> first(n);
    std::vector<double> second(n);
    for (std::size_t s = 0; s < n; ++s) {
        const int d = hamming(samples.configuration(s, 0), samples.configuration(s, 1));
        stats.mass[bin_of_distance(length, d)] += 1.0;
        const double r = static_cast<double>(length - 2 * d) / length;
        first[s] = r;
        second[s] = r * r;
    }
    for (auto& m : stats.mass)
        m /= static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        stats.first_moment += first[s];
        stats.second_moment += second[s];
    }
    stats.first_moment /= static_cast<double>(n);
    stats.second_moment /= static_cast<double>(n);
    stats.first_std_error = batch_standard_error(first);
    stats.second_std_error = batch_standard_error(second);
    return stats;
}

OverlapStats overlap_distribution_mcmc(const CouplingSample& c, double beta, const McmcOptions& opts,
                                       const RandomStream& rng)
{
    return overlap_from_samples(mcmc_chain(c, beta, opts, rng));
}

double total_variation(const OverlapStats& a, const OverlapStats& b)
{
    if (a.mass.size() != b.mass.size())
        throw std::invalid_argument("histograms use different bins");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.mass.size(); ++i)
        acc += std::abs(a.mass[i] - b.mass[i]);
    return 0.5 * acc;
}

double ultrametric_defect(std::span<const Spin> a, std::span<const Spin> b, std::span<const Spin> c)
{
    if (a.size() != b.size() || a.size() != c.size() || a.empty())
        throw std::invalid_argument("configurations must have equal positive length");
    const double l = static_cast<double>(a.size());
    double d[3] = {2.0 * std::sqrt(hamming(a, b) / l), 2.0 * std::sqrt(hamming(a, c) / l),
                   2.0 * std::sqrt(hamming(b, c) / l)};
    std::sort(d, d + 3);
    return d[2] - d[1];
}

TripleDefectStats ultrametric_defects_exact(const CouplingSample& c, double beta, double epsilon)
{
    check_beta(beta);
    if (!(epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    const int length = c.config_length();
    if (length > kTripleExactCap)
        throw std::invalid_argument("enumeration too large: exact triples need length <= " +
                                    std::to_string(kTripleExactCap));
    const auto g = gibbs_weights(c, beta);
    const auto table = kernels::omp::triple_distances(g, length);

    TripleDefectStats out;
    out.epsilon = epsilon;
    out.mode = SamplingMode::exact;
    std::vector<std::pair<double, double>> values;
    const double l = length;
    for (int x = 0; x <= length; ++x)
        for (int y = 0; y <= length; ++y)
            for (int z = 0; z <= length; ++z) {
                const double mass = table.at(x, y, z);
                if (mass <= 0.0)
                    continue;
                double d[3] = {2.0 * std::sqrt(x / l), 2.0 * std::sqrt(y / l), 2.0 * std::sqrt(z / l)};
                std::sort(d, d + 3);
                const double defect = d[2] - d[1];
                values.emplace_back(defect, mass);
                if (defect > epsilon + kTie)
                    out.violation_fraction += mass;
            }
    for (double q : kQuantiles)
        out.quantiles.emplace_back(q, weighted_quantile(values, q));
    return out;
}

TripleDefectStats defects_from_samples(const ReplicaSamples& samples, double epsilon)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    if (samples.n_replicas < 3)
        throw std::invalid_argument("defects need three replicas");
    const std::size_t n = samples.n_samples();
    if (n == 0)
        throw std::invalid_argument("no recorded samples");
    std::vector<double> indicator(n);
    std::vector<std::pair<double, double>> values(n);
    TripleDefectStats out;
    out.epsilon = epsilon;
    out.mode = SamplingMode::mcmc;
    for (std::size_t s = 0; s < n; ++s) {
        const double defect = ultrametric_defect(samples.configuration(s, 0), samples.configuration(s, 1),
                                                 samples.configuration(s, 2));
        values[s] = {defect, 1.0};
        indicator[s] = defect > epsilon + kTie ? 1.0 : 0.0;
        out.violation_fraction += indicator[s];
    }
    out.violation_fraction /= static_cast<double>(n);
    out.violation_std_error = batch_standard_error(indicator);
    for (double q : kQuantiles)
        out.quantiles.emplace_back(q, weighted_quantile(values, q));
    return out;
}

TripleDefectStats ultrametric_defects_mcmc(const CouplingSample& c, double beta, double epsilon,
                                           McmcOptions opts, const RandomStream& rng)
{
    opts.n_replicas = 3;
    return defects_from_samples(mcmc_chain(c, beta, opts, rng), epsilon);
}

double mean_energy(std::span<const double> levels, double beta)
{
    if (levels.empty())
        throw std::invalid_argument("no energy levels");
    double top = -std::numeric_limits<double>::infinity();
    for (double e : levels)
        top = std::max(top, -beta * e);
    double z = 0.0;
    double acc = 0.0;
    for (double e : levels) {
        const double w = std::exp(-beta * e - top);
        z += w;
        acc += w * e;
    }
    return acc / z;
}

double inverse_temperature(std::span<const double> levels, double target)
{
    if (levels.size() < 2 || !std::is_sorted(levels.begin(), levels.end()))
        throw std::invalid_argument("levels must be sorted with at least two entries");
    if (!(target > levels.front() && target < levels.back()))
        throw std::invalid_argument("no solution: target outside (e_1, e_K)");
    double lo = -1.0;
    double hi = 1.0;
    while (mean_energy(levels, lo) <= target)
        lo *= 2.0;
    while (mean_energy(levels, hi) >= target)
        hi *= 2.0;
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_energy(levels, mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double batch_standard_error(std::span<const double> series, int batches)
{
    const auto n = series.size();
    if (batches < 2 || n < static_cast<std::size_t>(2 * batches))
        batches = std::max(1, static_cast<int>(n / 2));
    if (batches < 2)
        return 0.0;
    const std::size_t size = n / static_cast<std::size_t>(batches);
    std::vector<double> means(static_cast<std::size_t>(batches), 0.0);
    for (int b = 0; b < batches; ++b) {
        for (std::size_t i = 0; i < size; ++i)
            means[static_cast<std::size_t>(b)] += series[static_cast<std::size_t>(b) * size + i];
        means[static_cast<std::size_t>(b)] /= static_cast<double>(size);
    }
    double mean = 0.0;
    for (double m : means)
        mean += m;
    mean /= batches;
    double ss = 0.0;
    for (double m : means)
        ss += (m - mean) * (m - mean);
    return std::sqrt(ss / (batches - 1) / batches);
}

}  // namespace spinglass
