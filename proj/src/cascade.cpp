#include "spinglass/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spinglass/quadrature.hpp"

namespace spinglass {

kernels::NormalRule trapezoid_rule(double sd)
{
    // Spectral accuracy for integrands analytic in a strip of half-width ~ pi / (2 sd).
    const double delta = std::min(0.2, 0.33 / std::max(sd, 1e-12));
    const int half = static_cast<int>(std::ceil(9.0 / delta));
    if (half > 255)
        throw std::invalid_argument("cascade step variance too large for the trapezoid rule");
    kernels::NormalRule rule;
    double total = 0.0;
    for (int k = -half; k <= half; ++k) {
        const double z = k * delta;
        rule.nodes.push_back(z);
        rule.weights.push_back(std::exp(-0.5 * z * z));
        total += rule.weights.back();
    }
    for (auto& w : rule.weights)
        w /= total;
    return rule;
}

Cascade::Cascade(std::vector<CascadeStep> steps, const CascadeGrid& grid) : steps_(std::move(steps))
{
    if (steps_.empty())
        throw std::invalid_argument("cascade needs at least one step");
    if (!(grid.dx > 0.0))
        throw std::invalid_argument("cascade grid spacing must be positive");
    double total = 0.0;
    for (const auto& s : steps_) {
        if (!(s.variance >= 0.0) || !std::isfinite(s.variance) || !std::isfinite(s.zeta) || s.zeta < 0.0)
            throw std::invalid_argument("cascade steps need finite nonnegative variance and exponent");
        total += s.variance;
    }
    const double half = grid.half_width > 0.0 ? grid.half_width : 6.0 * std::sqrt(total) + 6.0;
    const auto n_half = static_cast<std::size_t>(std::ceil(half / grid.dx));
    center_ = n_half;

    kernels::GridTable shape;
    shape.dx = grid.dx;
    shape.x0 = -static_cast<double>(n_half) * grid.dx;
    shape.value.assign(2 * n_half + 1, 0.0);
    shape.slope.assign(2 * n_half + 1, 0.0);

    const std::size_t k = steps_.size();
    rules_.reserve(k);
    for (const auto& step : steps_) {
        const double sd = std::sqrt(step.variance);
        if (grid.order > 0)
            rules_.push_back(normal_rule(grid.order));
        else if (sd <= 0.6)
            rules_.push_back(normal_rule(40));
        else
            rules_.push_back(trapezoid_rule(sd));
    }
    tables_.assign(k, shape);
    // Zero-variance steps are identities; the next real step still sees the exact terminal.
    const kernels::GridTable* upper = nullptr;
    for (std::size_t s = k; s-- > 0;) {
        const auto& step = steps_[s];
        if (step.variance == 0.0) {
            tables_[s] = upper ? *upper : terminal_table();
            continue;
        }
        kernels::omp::cascade_step(upper, std::sqrt(step.variance), step.zeta, rules_[s], tables_[s]);
        upper = &tables_[s];
        for (double v : tables_[s].value)
            if (!std::isfinite(v))
                throw std::overflow_error("cascade overflow at step " + std::to_string(s) +
                                          ": rescale the exponents or refine the grid");
    }
}

kernels::GridTable Cascade::terminal_table() const
{
    kernels::GridTable t = tables_.front();
    for (std::size_t i = 0; i < t.size(); ++i) {
        t.value[i] = kernels::log_cosh(t.x(i));
        t.slope[i] = std::tanh(t.x(i));
    }
    return t;
}

double Cascade::value() const { return tables_.front().value[center_]; }

std::vector<double> Cascade::squared_slope_means() const
{
    const std::size_t k = steps_.size();
    const auto& grid = tables_.front();
    const std::size_t n = grid.size();
    const auto terminal = terminal_table();
    std::vector<double> rho(n, 0.0);
    std::vector<double> next(n);
    std::vector<double> weight;
    std::vector<double> target;
    rho[center_] = 1.0;
    std::vector<double> out(k);

    for (std::size_t s = 0; s < k; ++s) {
        const auto& upper = s + 1 < k ? tables_[s + 1] : terminal;
        const double var = steps_[s].variance;
        if (var > 0.0) {
            const double sd = std::sqrt(var);
            const double zeta = steps_[s].zeta;
            const auto& rule = rules_[s];
            const std::size_t order = rule.nodes.size();
            weight.resize(order);
            target.resize(order);
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (rho[i] == 0.0)
                    continue;
                double top = -1e300;
                for (std::size_t q = 0; q < order; ++q) {
                    const double y = grid.x(i) + sd * rule.nodes[q];
                    double v = 0.0;
                    double slope = 0.0;
                    kernels::evaluate(upper, y, v, slope);
                    target[q] = y;
                    weight[q] = zeta * v;
                    top = std::max(top, weight[q]);
                }
                double z = 0.0;
                for (std::size_t q = 0; q < order; ++q) {
                    weight[q] = rule.weights[q] * std::exp(weight[q] - top);
                    z += weight[q];
                }
                // Adjoint of four-point Lagrange interpolation.
                for (std::size_t q = 0; q < order; ++q) {
                    const double mass = rho[i] * weight[q] / z;
                    const double pos = std::clamp((target[q] - grid.x0) / grid.dx, 0.0,
                                                  static_cast<double>(n - 1));
                    auto base = static_cast<std::ptrdiff_t>(pos) - 1;
                    base = std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 4);
                    const double u = pos - static_cast<double>(base) - 1.0;
                    const auto b = static_cast<std::size_t>(base);
                    next[b] += mass * (-u * (u - 1.0) * (u - 2.0) / 6.0);
                    next[b + 1] += mass * ((u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0);
                    next[b + 2] += mass * (-(u + 1.0) * u * (u - 2.0) / 2.0);
                    next[b + 3] += mass * ((u + 1.0) * u * (u - 1.0) / 6.0);
                }
            }
            std::swap(rho, next);
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += rho[i] * upper.slope[i] * upper.slope[i];
        out[s] = acc;
    }
    return out;
}

}  // namespace spinglass
