#include "spinglass/parisi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spinglass/optimize.hpp"
#include "spinglass/random.hpp"

namespace spinglass {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

void check_beta(double beta)
{
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be finite and nonnegative");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights))
{
    if (atoms_.empty() || atoms_.size() != weights_.size())
        throw std::invalid_argument("measure needs matching nonempty atoms and weights");
    double total = 0.0;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        if (!(atoms_[j] >= 0.0 && atoms_[j] <= 1.0))
            throw std::invalid_argument("atoms must lie in [0, 1]");
        if (j > 0 && !(atoms_[j] > atoms_[j - 1]))
            throw std::invalid_argument("atoms must be strictly increasing");
        if (!(weights_[j] > 0.0))
            throw std::invalid_argument("weights must be positive");
        total += weights_[j];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("weights must sum to 1");
}

AtomicMeasure AtomicMeasure::canonical(std::vector<double> atoms, std::vector<double> weights)
{
    if (atoms.size() != weights.size())
        throw std::invalid_argument("measure needs matching atoms and weights");
    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    std::vector<double> a;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i : order) {
        if (weights[i] < 0.0)
            throw std::invalid_argument("weights must be nonnegative");
        if (weights[i] == 0.0)
            continue;
        total += weights[i];
        if (!a.empty() && a.back() == atoms[i]) {
            w.back() += weights[i];
        } else {
            a.push_back(atoms[i]);
            w.push_back(weights[i]);
        }
    }
    if (a.empty())
        throw std::invalid_argument("measure has no mass");
    for (auto& x : w)
        x /= total;
    // Absorb the rounding residue so the constructor's tolerance holds.
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return AtomicMeasure(std::move(a), std::move(w));
}

double measure_cdf(const AtomicMeasure& mu, double t)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("measure_cdf: t must lie in [0, 1]");
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        if (mu.atoms()[j] <= t)
            acc += mu.weights()[j];
    return std::min(acc, 1.0);
}

PdeConfig PdeConfig::defaults(double beta)
{
    PdeConfig cfg;
    cfg.half_width = std::max(6.0, 4.0 * beta * std::sqrt(2.0) + 4.0);
    const double dx = 0.01;
    cfg.nx = 2 * static_cast<int>(std::ceil(cfg.half_width / dx)) + 1;
    cfg.half_width = dx * (cfg.nx - 1) / 2;
    cfg.nt = std::max(400, static_cast<int>(std::ceil(2.0 * beta * beta / dx)));
    return cfg;
}

void PdeConfig::validate() const
{
    if (nx < 16 || nt < 16)
        throw std::invalid_argument("pde config: nx and nt must be at least 16");
    if (!(half_width >= 4.0))
        throw std::invalid_argument("pde config: half_width must be at least 4");
    if (quad_order < 10)
        throw std::invalid_argument("pde config: quad_order must be at least 10");
}

std::vector<CascadeStep> parisi_steps(const AtomicMeasure& mu, double beta)
{
    std::vector<CascadeStep> steps;
    const double scale = 2.0 * beta * beta;
    double left = 0.0;
    double cdf = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double q = mu.atoms()[j];
        steps.push_back({scale * (q - left), cdf});
        cdf += mu.weights()[j];
        left = q;
    }
    steps.push_back({scale * (1.0 - left), 1.0});
    return steps;
}

double phi_recursive(const AtomicMeasure& mu, double beta, int quad_order)
{
    check_beta(beta);
    if (quad_order < 10)
        throw std::invalid_argument("quadrature order must be at least 10");
    if (beta == 0.0)
        return 0.0;
    return Cascade(parisi_steps(mu, beta), CascadeGrid{0.01, quad_order, 0.0}).value();
}

double phi_recursive(const AtomicMeasure& mu, double beta, const PdeConfig& cfg)
{
    return phi_recursive(mu, beta, cfg.quad_order);
}

double parisi_pde_fd(const AtomicMeasure& mu, double beta, const PdeConfig& cfg)
{
    check_beta(beta);
    cfg.validate();
    const auto nx = static_cast<std::size_t>(cfg.nx);
    const double dx = cfg.dx();
    std::vector<double> phi(nx);
    for (std::size_t i = 0; i < nx; ++i)
        phi[i] = std::log(std::cosh(-cfg.half_width + dx * static_cast<double>(i)));
    if (beta == 0.0)
        return std::log(std::cosh(0.0));

    std::vector<double> breaks{0.0};
    for (double q : mu.atoms())
        if (q > 0.0 && q < 1.0)
            breaks.push_back(q);
    breaks.push_back(1.0);

    std::vector<double> grad_sq(nx, 0.0);
    std::vector<double> pred(nx);
    std::vector<double> explicit_term(nx);
    std::vector<double> c_prime(nx);
    std::vector<double> d_prime(nx);
    auto gradient_squared = [&](const std::vector<double>& f, std::vector<double>& out) {
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double g = (f[i + 1] - f[i - 1]) / (2.0 * dx);
            out[i] = g * g;
        }
    };
    // One Crank-Nicolson diffusion step with a given explicit source; D2 = 0 at nodes 1 and nx-2.
    auto cn_step = [&](const std::vector<double>& f, const std::vector<double>& source, double a,
                       std::vector<double>& out) {
        const double r = a / (dx * dx);
        out[1] = f[1] + source[1];
        out[nx - 2] = f[nx - 2] + source[nx - 2];
        const double diag = 1.0 + r;
        const double off = -0.5 * r;
        // Thomas algorithm over interior nodes 2..nx-3.
        const std::size_t lo = 2;
        const std::size_t hi = nx - 3;
        for (std::size_t i = lo; i <= hi; ++i) {
            double rhs = f[i] + 0.5 * r * (f[i + 1] - 2.0 * f[i] + f[i - 1]) + source[i];
            if (i == lo)
                rhs -= off * out[1];
            if (i == hi)
                rhs -= off * out[nx - 2];
            if (i == lo) {
                c_prime[i] = off / diag;
                d_prime[i] = rhs / diag;
            } else {
                const double denom = diag - off * c_prime[i - 1];
                c_prime[i] = off / denom;
                d_prime[i] = (rhs - off * d_prime[i - 1]) / denom;
            }
        }
        out[hi] = d_prime[hi];
        for (std::size_t i = hi; i-- > lo;)
            out[i] = d_prime[i] - c_prime[i] * out[i + 1];
        out[0] = 2.0 * out[1] - out[2];
        out[nx - 1] = 2.0 * out[nx - 2] - out[nx - 3];
    };

    for (std::size_t seg = breaks.size() - 1; seg-- > 0;) {
        const double a0 = breaks[seg];
        const double b0 = breaks[seg + 1];
        const double m = measure_cdf(mu, a0);
        const int steps = std::max(1, static_cast<int>(std::ceil((b0 - a0) * cfg.nt)));
        const double dt = (b0 - a0) / steps;
        const double a = beta * beta * dt;
        for (int s = 0; s < steps; ++s) {
            gradient_squared(phi, grad_sq);
            for (std::size_t i = 0; i < nx; ++i)
                explicit_term[i] = a * m * grad_sq[i];
            cn_step(phi, explicit_term, a, pred);
            gradient_squared(pred, explicit_term);
            for (std::size_t i = 0; i < nx; ++i)
                explicit_term[i] = 0.5 * a * m * (grad_sq[i] + explicit_term[i]);
            cn_step(phi, explicit_term, a, pred);
            phi.swap(pred);
        }
        for (double v : phi)
            if (!std::isfinite(v))
                throw std::runtime_error("finite-difference solve diverged: refine grid");
    }
    const double pos = cfg.half_width / dx;
    const auto i = static_cast<std::size_t>(pos);
    const double u = pos - static_cast<double>(i);
    return i + 1 < nx ? (1.0 - u) * phi[i] + u * phi[i + 1] : phi[i];
}

namespace {

double parisi_penalty(const AtomicMeasure& mu, double beta)
{
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        acc += mu.weights()[j] * (1.0 - mu.atoms()[j] * mu.atoms()[j]);
    return 0.5 * beta * beta * acc;
}

double functional_on_grid(const AtomicMeasure& mu, double beta, double dx, int order)
{
    if (beta == 0.0)
        return kLog2;
    const double phi = Cascade(parisi_steps(mu, beta), CascadeGrid{dx, order, 0.0}).value();
    return phi - parisi_penalty(mu, beta) + kLog2;
}

}  // namespace

double parisi_functional(const AtomicMeasure& mu, double beta, const PdeConfig& cfg)
{
    check_beta(beta);
    const double phi = cfg.scheme == PdeScheme::finite_difference ? parisi_pde_fd(mu, beta, cfg)
                                                                 : phi_recursive(mu, beta, cfg);
    return phi - parisi_penalty(mu, beta) + kLog2;
}

double parisi_functional(const AtomicMeasure& mu, double beta)
{
    return parisi_functional(mu, beta, PdeConfig::defaults(beta));
}

namespace {

AtomicMeasure decode_measure(std::span<const double> x, int k)
{
    std::vector<double> atoms(static_cast<std::size_t>(k));
    std::vector<double> logits(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j)
        atoms[static_cast<std::size_t>(j)] = logistic(std::clamp(x[static_cast<std::size_t>(j)], -40.0, 40.0));
    for (int j = 0; j + 1 < k; ++j)
        logits[static_cast<std::size_t>(j)] = std::clamp(x[static_cast<std::size_t>(k + j)], -40.0, 40.0);
    std::sort(atoms.begin(), atoms.end());
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> weights(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        weights[static_cast<std::size_t>(j)] = std::exp(logits[static_cast<std::size_t>(j)] - top);
    return AtomicMeasure::canonical(std::move(atoms), std::move(weights));
}

std::vector<double> encode_warm_start(const ParisiOptions& opts, int k)
{
    std::vector<double> atoms = opts.warm_atoms;
    std::vector<double> weights = opts.warm_weights;
    while (static_cast<int>(atoms.size()) < k) {
        atoms.push_back(atoms.back());
        weights.back() *= 0.5;
        weights.push_back(weights.back());
    }
    std::vector<double> x(static_cast<std::size_t>(2 * k - 1));
    for (int j = 0; j < k; ++j) {
        const double q = std::clamp(atoms[static_cast<std::size_t>(j)], 1e-17, 1.0 - 1e-16);
        x[static_cast<std::size_t>(j)] = std::log(q / (1.0 - q));
    }
    for (int j = 0; j + 1 < k; ++j)
        x[static_cast<std::size_t>(k + j)] =
            std::log(weights[static_cast<std::size_t>(j)] / weights[static_cast<std::size_t>(k - 1)]);
    return x;
}

}  // namespace

ParisiMinimum minimize_parisi(double beta, int k, const ParisiOptions& opts)
{
    check_beta(beta);
    if (k < 1)
        throw std::invalid_argument("k must be at least 1");
    if (opts.starts < 1)
        throw std::invalid_argument("at least one start is required");
    const bool warm = !opts.warm_atoms.empty();
    if (warm && (opts.warm_atoms.size() != opts.warm_weights.size() ||
                 static_cast<int>(opts.warm_atoms.size()) > k))
        throw std::invalid_argument("warm start must have at most k atoms and matching weights");

    const auto dim = static_cast<std::size_t>(2 * k - 1);
    std::vector<std::vector<double>> initial(static_cast<std::size_t>(opts.starts));
    RandomStream rng(opts.seed, 0x5041u);
    for (int s = 0; s < opts.starts; ++s) {
        auto& x = initial[static_cast<std::size_t>(s)];
        if (s == 0 && warm) {
            x = encode_warm_start(opts, k);
            continue;
        }
        x.resize(dim);
        for (std::size_t j = 0; j < dim; ++j)
            x[j] = (j < static_cast<std::size_t>(k) ? 2.0 : 1.0) * rng.gaussian();
    }

    auto objective = [&](std::span<const double> x) {
        return functional_on_grid(decode_measure(x, k), beta, opts.grid_dx, opts.quad_order);
    };
    NelderMeadOptions nm;
    nm.ftol = opts.ftol;
    nm.max_evaluations = opts.max_evaluations;
    nm.initial_step = 1.0;

    ParisiMinimum out;
    out.starts.resize(static_cast<std::size_t>(opts.starts));
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < opts.starts; ++s) {
        const auto r = nelder_mead(objective, initial[static_cast<std::size_t>(s)], nm);
        const auto mu = decode_measure(r.x, k);
        auto& trace = out.starts[static_cast<std::size_t>(s)];
        trace.index = s;
        trace.initial = initial[static_cast<std::size_t>(s)];
        trace.value = r.value;
        trace.evaluations = r.evaluations;
        trace.converged = r.converged;
        trace.atoms = mu.atoms();
        trace.weights = mu.weights();
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < out.starts.size(); ++s)
        if (out.starts[s].value < out.starts[best].value)
            best = s;
    out.measure = AtomicMeasure(out.starts[best].atoms, out.starts[best].weights);
    out.value = out.starts[best].value;
    out.converged = out.starts[best].converged;
    return out;
}

}  // namespace spinglass
