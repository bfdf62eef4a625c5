#include "spinglass/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <omp.h>

#include "spinglass/energy.hpp"

namespace spinglass::kernels {

double log_cosh(double x)
{
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

namespace {

constexpr double kLog2 = 0.69314718055994530942;

double log_2cosh(double x)
{
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a));
}

void check_table_size(const CouplingSample& c, std::span<const double> out)
{
    if (c.config_length() > 30 || out.size() != (std::size_t{1} << c.config_length()))
        throw std::invalid_argument("energy table size must be 2^config_length");
}

std::size_t block_count(std::size_t size) { return (size + kBlock - 1) / kBlock; }

std::uint64_t gray(std::uint64_t i) { return i ^ (i >> 1); }

// Gray-code walk over [begin, end) of the Gray sequence, writing energies at natural indices.
void gray_block_energies(const CouplingSample& c, std::uint64_t begin, std::uint64_t end,
                         std::span<double> out)
{
    FieldState state(c, decode_configuration(gray(begin), c.config_length()));
    out[gray(begin)] = state.energy();
    for (std::uint64_t i = begin + 1; i < end; ++i) {
        state.flip(std::countr_zero(i));
        out[gray(i)] = state.energy();
    }
}

// Partial sums a_j(sigma_1) = N^{-1/2} sum_i W_ij sigma_1i.
void layer_fields(std::span<const double> w, std::size_t n, std::uint64_t index,
                  std::vector<double>& a)
{
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    a.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = ((index >> i) & 1u) ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j)
            a[j] += s * w[i * n + j];
    }
    for (auto& x : a)
        x *= inv_sqrt_n;
}

double layer_value(std::span<const double> a, double scale, std::span<const double> field1,
                   std::span<const double> field2, std::uint64_t index)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        acc += log_2cosh(scale * a[j] + field2[j]);
    for (std::size_t i = 0; i < field1.size(); ++i)
        acc += ((index >> i) & 1u) ? -field1[i] : field1[i];
    return acc;
}

void check_layer_args(const CouplingSample& c, std::span<const double> field1,
                      std::span<const double> field2, std::span<const double> out)
{
    const auto n = static_cast<std::size_t>(c.n());
    if (!c.is_bipartite() || field1.size() != n || field2.size() != n || n > 30 ||
        out.size() != (std::size_t{1} << n))
        throw std::invalid_argument("bipartite layer sums: inconsistent arguments");
}

void check_power_of_two(std::size_t size)
{
    if (size == 0 || !std::has_single_bit(size))
        throw std::invalid_argument("table size must be a power of two");
}

// Four-point Lagrange interpolation of a uniform table (linear extrapolation outside).
double lagrange(const std::vector<double>& y, double x0, double dx, double x)
{
    const std::size_t n = y.size();
    const double pos = (x - x0) / dx;
    if (pos <= 0.0)
        return y[0] + (y[1] - y[0]) * pos;
    const double last = static_cast<double>(n - 1);
    if (pos >= last)
        return y[n - 1] + (y[n - 1] - y[n - 2]) * (pos - last);
    auto base = static_cast<std::ptrdiff_t>(pos) - 1;
    base = std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 4);
    const double u = pos - static_cast<double>(base) - 1.0;
    const auto b = static_cast<std::size_t>(base);
    const double lm = -u * (u - 1.0) * (u - 2.0) / 6.0;
    const double l0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    const double l1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
    const double l2 = (u + 1.0) * u * (u - 1.0) / 6.0;
    return lm * y[b] + l0 * y[b + 1] + l1 * y[b + 2] + l2 * y[b + 3];
}

void upper_eval(const GridTable* upper, double x, double& v, double& s)
{
    if (upper == nullptr) {
        v = log_cosh(x);
        s = std::tanh(x);
    } else {
        evaluate(*upper, x, v, s);
    }
}

constexpr std::size_t kMaxNodes = 512;

void cascade_point(const GridTable* upper, double sd, double zeta, const NormalRule& rule,
                   double x, double& value, double& slope)
{
    const std::size_t k = rule.nodes.size();
    double v[kMaxNodes];
    double s[kMaxNodes];
    for (std::size_t n = 0; n < k; ++n)
        upper_eval(upper, x + sd * rule.nodes[n], v[n], s[n]);
    if (zeta == 0.0) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t n = 0; n < k; ++n) {
            a += rule.weights[n] * v[n];
            b += rule.weights[n] * s[n];
        }
        value = a;
        slope = b;
        return;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < k; ++n)
        m = std::max(m, zeta * v[n]);
    double z = 0.0;
    double b = 0.0;
    for (std::size_t n = 0; n < k; ++n) {
        const double e = rule.weights[n] * std::exp(zeta * v[n] - m);
        z += e;
        b += e * s[n];
    }
    value = (m + std::log(z)) / zeta;
    slope = b / z;
}

void check_cascade_args(const NormalRule& rule, const GridTable& lower)
{
    if (rule.nodes.empty() || rule.nodes.size() > kMaxNodes || rule.nodes.size() != rule.weights.size())
        throw std::invalid_argument("cascade step: quadrature rule must have 1 to 512 nodes");
    if (lower.size() < 4)
        throw std::invalid_argument("cascade step: grid needs at least 4 points");
}

}  // namespace

void evaluate(const GridTable& t, double x, double& value, double& slope)
{
    const std::size_t n = t.size();
    const double pos = (x - t.x0) / t.dx;
    if (pos <= 0.0) {
        slope = t.slope[0];
        value = t.value[0] + slope * (x - t.x0);
        return;
    }
    const double last = static_cast<double>(n - 1);
    if (pos >= last) {
        slope = t.slope[n - 1];
        value = t.value[n - 1] + slope * (x - t.x(n - 1));
        return;
    }
    const auto i = std::min(static_cast<std::size_t>(pos), n - 2);
    const double u = pos - static_cast<double>(i);
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double y0 = t.value[i];
    const double y1 = t.value[i + 1];
    const double m0 = t.slope[i] * t.dx;
    const double m1 = t.slope[i + 1] * t.dx;
    value = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 +
            (u3 - u2) * m1;
    slope = lagrange(t.slope, t.x0, t.dx, x);
}

// ---------------------------------------------------------------- serial

namespace serial {

void energy_table(const CouplingSample& c, std::span<double> out)
{
    check_table_size(c, out);
    for (std::uint64_t idx = 0; idx < out.size(); ++idx)
        out[idx] = hamiltonian(c, decode_configuration(idx, c.config_length()));
}

double log_sum_exp(std::span<const double> x, double scale)
{
    if (x.empty())
        return -std::numeric_limits<double>::infinity();
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x)
        m = std::max(m, scale * v);
    double s = 0.0;
    for (double v : x)
        s += std::exp(scale * v - m);
    return m + std::log(s);
}

void bipartite_layer_sums(const CouplingSample& c, double scale, std::span<const double> field1,
                          std::span<const double> field2, std::span<double> out)
{
    check_layer_args(c, field1, field2, out);
    const auto n = static_cast<std::size_t>(c.n());
    std::vector<double> a;
    for (std::uint64_t idx = 0; idx < out.size(); ++idx) {
        layer_fields(c.matrix(), n, idx, a);
        out[idx] = layer_value(a, scale, field1, field2, idx);
    }
}

void xor_autocorrelation(std::span<const double> g, std::span<double> out)
{
    check_power_of_two(g.size());
    if (out.size() != g.size())
        throw std::invalid_argument("autocorrelation output size mismatch");
    for (std::size_t d = 0; d < g.size(); ++d) {
        double acc = 0.0;
        for (std::size_t s = 0; s < g.size(); ++s)
            acc += g[s] * g[s ^ d];
        out[d] = acc;
    }
}

TripleTable triple_distances(std::span<const double> g, int length)
{
    check_power_of_two(g.size());
    TripleTable table{length, std::vector<double>(static_cast<std::size_t>((length + 1) * (length + 1) * (length + 1)), 0.0)};
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b)
            for (std::size_t c = 0; c < g.size(); ++c)
                table.at(std::popcount(a ^ b), std::popcount(a ^ c), std::popcount(b ^ c)) +=
                    g[a] * g[b] * g[c];
    return table;
}

void cascade_step(const GridTable* upper, double sd, double zeta, const NormalRule& rule,
                  GridTable& lower)
{
    check_cascade_args(rule, lower);
    for (std::size_t i = 0; i < lower.size(); ++i)
        cascade_point(upper, sd, zeta, rule, lower.x(i), lower.value[i], lower.slope[i]);
}

}  // namespace serial

// ---------------------------------------------------------------- OpenMP

namespace omp {

void energy_table(const CouplingSample& c, std::span<double> out)
{
    check_table_size(c, out);
    const auto size = static_cast<std::int64_t>(out.size());
    if (!c.is_sk() && !c.is_bipartite()) {
#pragma omp parallel for schedule(static)
        for (std::int64_t idx = 0; idx < size; ++idx)
            out[static_cast<std::size_t>(idx)] =
                hamiltonian(c, decode_configuration(static_cast<std::uint64_t>(idx), c.config_length()));
        return;
    }
    const auto blocks = static_cast<std::int64_t>(block_count(out.size()));
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const auto begin = static_cast<std::uint64_t>(b) * kBlock;
        const auto end = std::min<std::uint64_t>(begin + kBlock, out.size());
        gray_block_energies(c, begin, end, out);
    }
}

double log_sum_exp(std::span<const double> x, double scale)
{
    if (x.empty())
        return -std::numeric_limits<double>::infinity();
    const auto blocks = static_cast<std::int64_t>(block_count(x.size()));
    std::vector<double> block_max(static_cast<std::size_t>(blocks));
    std::vector<double> block_sum(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
        const std::size_t end = std::min(begin + kBlock, x.size());
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t i = begin; i < end; ++i)
            m = std::max(m, scale * x[i]);
        block_max[static_cast<std::size_t>(b)] = m;
    }
    const double m = *std::max_element(block_max.begin(), block_max.end());
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::size_t begin = static_cast<std::size_t>(b) * kBlock;
        const std::size_t end = std::min(begin + kBlock, x.size());
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            s += std::exp(scale * x[i] - m);
        block_sum[static_cast<std::size_t>(b)] = s;
    }
    double s = 0.0;
    for (double v : block_sum)
        s += v;
    return m + std::log(s);
}

void bipartite_layer_sums(const CouplingSample& c, double scale, std::span<const double> field1,
                          std::span<const double> field2, std::span<double> out)
{
    check_layer_args(c, field1, field2, out);
    const auto n = static_cast<std::size_t>(c.n());
    const auto w = c.matrix();
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    const auto blocks = static_cast<std::int64_t>(block_count(out.size()));
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const auto begin = static_cast<std::uint64_t>(b) * kBlock;
        const auto end = std::min<std::uint64_t>(begin + kBlock, out.size());
        std::vector<double> a;
        std::uint64_t idx = gray(begin);
        layer_fields(w, n, idx, a);
        out[idx] = layer_value(a, scale, field1, field2, idx);
        for (std::uint64_t i = begin + 1; i < end; ++i) {
            const auto k = static_cast<std::size_t>(std::countr_zero(i));
            // Spin k flips from old to -old; a_j moves by -2 old W_kj / sqrt(N).
            const double old = ((idx >> k) & 1u) ? -1.0 : 1.0;
            const double coef = -2.0 * old * inv_sqrt_n;
            for (std::size_t j = 0; j < n; ++j)
                a[j] += coef * w[k * n + j];
            idx ^= std::uint64_t{1} << k;
            out[idx] = layer_value(a, scale, field1, field2, idx);
        }
    }
}

void xor_autocorrelation(std::span<const double> g, std::span<double> out)
{
    check_power_of_two(g.size());
    if (out.size() != g.size())
        throw std::invalid_argument("autocorrelation output size mismatch");
    const auto size = static_cast<std::int64_t>(g.size());
    std::copy(g.begin(), g.end(), out.begin());
    // Walsh-Hadamard transform, pointwise square, inverse transform.
    auto transform = [&](std::span<double> v) {
        for (std::int64_t h = 1; h < size; h *= 2) {
#pragma omp parallel for schedule(static)
            for (std::int64_t p = 0; p < size / 2; ++p) {
                const std::int64_t block = p / h;
                const std::int64_t offset = p % h;
                const auto i = static_cast<std::size_t>(block * 2 * h + offset);
                const auto j = i + static_cast<std::size_t>(h);
                const double x = v[i];
                const double y = v[j];
                v[i] = x + y;
                v[j] = x - y;
            }
        }
    };
    transform(out);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < size; ++i)
        out[static_cast<std::size_t>(i)] *= out[static_cast<std::size_t>(i)];
    transform(out);
    const double inv = 1.0 / static_cast<double>(size);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < size; ++i)
        out[static_cast<std::size_t>(i)] *= inv;
}

TripleTable triple_distances(std::span<const double> g, int length)
{
    check_power_of_two(g.size());
    const auto l1 = static_cast<std::size_t>(length + 1);
    const std::size_t cells = l1 * l1 * l1;
    const auto size = static_cast<std::int64_t>(g.size());
    std::vector<double> partial(g.size() * cells, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t a = 0; a < size; ++a) {
        double* t = partial.data() + static_cast<std::size_t>(a) * cells;
        const auto ua = static_cast<std::size_t>(a);
        for (std::size_t b = 0; b < g.size(); ++b) {
            const double gab = g[ua] * g[b];
            const auto dab = static_cast<std::size_t>(std::popcount(ua ^ b));
            for (std::size_t c = 0; c < g.size(); ++c) {
                const auto dac = static_cast<std::size_t>(std::popcount(ua ^ c));
                const auto dbc = static_cast<std::size_t>(std::popcount(b ^ c));
                t[(dab * l1 + dac) * l1 + dbc] += gab * g[c];
            }
        }
    }
    TripleTable table{length, std::vector<double>(cells, 0.0)};
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t k = 0; k < cells; ++k)
            table.mass[k] += partial[a * cells + k];
    return table;
}

void cascade_step(const GridTable* upper, double sd, double zeta, const NormalRule& rule,
                  GridTable& lower)
{
    check_cascade_args(rule, lower);
    const auto size = static_cast<std::int64_t>(lower.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < size; ++i) {
        const auto k = static_cast<std::size_t>(i);
        cascade_point(upper, sd, zeta, rule, lower.x(k), lower.value[k], lower.slope[k]);
    }
}

}  // namespace omp

}  // namespace spinglass::kernels
