#include "spinglass/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spinglass {

namespace {

struct Simplex {
    std::vector<std::vector<double>> points;
    std::vector<double> values;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts)
{
    const std::size_t n = x0.size();
    if (n == 0)
        throw std::invalid_argument("nelder_mead needs at least one parameter");
    const double dn = static_cast<double>(n);
    const double alpha = 1.0;
    const double gamma = 1.0 + 2.0 / dn;
    const double rho = 0.75 - 1.0 / (2.0 * dn);
    const double sigma = 1.0 - 1.0 / dn;

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isnan(v) ? HUGE_VAL : v;
    };

    result.x = x0;
    result.value = eval(x0);
    for (int round = 0; round <= opts.restarts; ++round) {
        const double before = result.value;
        Simplex s;
        s.points.assign(n + 1, result.x);
        s.values.assign(n + 1, result.value);
        for (std::size_t i = 0; i < n; ++i) {
            s.points[i + 1][i] += opts.initial_step;
            s.values[i + 1] = eval(s.points[i + 1]);
        }
        std::vector<std::size_t> order(n + 1);
        bool converged = false;
        while (result.evaluations < opts.max_evaluations) {
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
            const std::size_t best = order.front();
            const std::size_t worst = order.back();
            const std::size_t second = order[n - 1];
            if (s.values[worst] - s.values[best] <= opts.ftol) {
                converged = true;
                break;
            }
            std::vector<double> centroid(n, 0.0);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    centroid[i] += s.points[order[k]][i] / dn;
            auto along = [&](double c) {
                std::vector<double> x(n);
                for (std::size_t i = 0; i < n; ++i)
                    x[i] = centroid[i] + c * (s.points[worst][i] - centroid[i]);
                return x;
            };
            auto reflected = along(-alpha);
            const double fr = eval(reflected);
            if (fr < s.values[best]) {
                auto expanded = along(-alpha * gamma);
                const double fe = eval(expanded);
                if (fe < fr) {
                    s.points[worst] = std::move(expanded);
                    s.values[worst] = fe;
                } else {
                    s.points[worst] = std::move(reflected);
                    s.values[worst] = fr;
                }
                continue;
            }
            if (fr < s.values[second]) {
                s.points[worst] = std::move(reflected);
                s.values[worst] = fr;
                continue;
            }
            const bool outside = fr < s.values[worst];
            auto contracted = along(outside ? -alpha * rho : rho);
            const double fc = eval(contracted);
            if (fc < (outside ? fr : s.values[worst])) {
                s.points[worst] = std::move(contracted);
                s.values[worst] = fc;
                continue;
            }
            for (std::size_t k = 1; k <= n; ++k) {
                auto& p = s.points[order[k]];
                for (std::size_t i = 0; i < n; ++i)
                    p[i] = s.points[best][i] + sigma * (p[i] - s.points[best][i]);
                s.values[order[k]] = eval(p);
            }
        }
        const auto best = static_cast<std::size_t>(
            std::min_element(s.values.begin(), s.values.end()) - s.values.begin());
        if (s.values[best] < result.value) {
            result.value = s.values[best];
            result.x = s.points[best];
        }
        result.converged = converged;
        if (!converged || before - result.value <= opts.ftol)
            break;
    }
    return result;
}

std::vector<double> project_monotone_nonnegative(std::span<const double> x)
{
    std::vector<double> level;
    std::vector<std::size_t> count;
    for (double v : x) {
        level.push_back(v);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const std::size_t c = count.back() + count[count.size() - 2];
            const double m = (level.back() * static_cast<double>(count.back()) +
                              level[level.size() - 2] * static_cast<double>(count[count.size() - 2])) /
                             static_cast<double>(c);
            level.pop_back();
            count.pop_back();
            level.back() = m;
            count.back() = c;
        }
    }
    std::vector<double> out;
    out.reserve(x.size());
    for (std::size_t b = 0; b < level.size(); ++b)
        out.insert(out.end(), count[b], std::max(0.0, level[b]));
    return out;
}

}  // namespace spinglass
