#include "spinglass/hj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "spinglass/optimize.hpp"
#include "spinglass/random.hpp"

namespace spinglass {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

std::vector<CascadeStep> psi_steps(const StepPath& q)
{
    const int m = q.m();
    std::vector<CascadeStep> steps(static_cast<std::size_t>(m));
    double previous = 0.0;
    for (int j = 0; j < m; ++j) {
        const double v = q[static_cast<std::size_t>(j)];
        steps[static_cast<std::size_t>(j)] = {2.0 * (v - previous), static_cast<double>(j) / m};
        previous = v;
    }
    return steps;
}

double sup_norm(std::span<const double> a)
{
    double m = 0.0;
    for (double x : a)
        m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

StepPath::StepPath(std::vector<double> values) : values_(std::move(values))
{
    if (values_.empty())
        throw std::invalid_argument("path needs at least one cell");
    for (std::size_t j = 0; j < values_.size(); ++j) {
        if (!std::isfinite(values_[j]) || values_[j] < 0.0)
            throw std::invalid_argument("path values must be finite and nonnegative");
        if (j > 0 && values_[j] < values_[j - 1])
            throw std::invalid_argument("path must be nondecreasing");
    }
}

double StepPath::integral() const
{
    double acc = 0.0;
    for (double v : values_)
        acc += v;
    return acc / static_cast<double>(values_.size());
}

PathPair::PathPair(StepPath a, StepPath b) : q1(std::move(a)), q2(std::move(b))
{
    if (q1.m() != q2.m())
        throw std::invalid_argument("paths of a pair need equal grid sizes");
}

double psi_initial(const StepPath& q, const CascadeGrid& grid)
{
    const double top = q.values().back();
    if (top == 0.0)
        return -kLog2;
    return top - (Cascade(psi_steps(q), grid).value() + kLog2);
}

double psi_initial(const PathPair& q, const CascadeGrid& grid)
{
    return psi_initial(q.q1, grid) + psi_initial(q.q2, grid);
}

std::vector<double> psi_gradient(const StepPath& q, const CascadeGrid& grid)
{
    if (q.values().back() == 0.0)
        return std::vector<double>(static_cast<std::size_t>(q.m()), 0.0);
    return Cascade(psi_steps(q), grid).squared_slope_means();
}

std::vector<double> path_gradient(const PathFunctional& g, const StepPath& q, double step)
{
    if (!(step > 1e-12))
        throw std::invalid_argument("path_gradient: step size underflow");
    const auto m = static_cast<std::size_t>(q.m());
    const auto& v = q.values();
    auto shifted = [&](std::size_t j, double c) {
        std::vector<double> w = v;
        for (std::size_t i = j; i < m; ++i)
            w[i] += c;
        return StepPath(std::move(w));
    };
    const double base = g(q);
    std::vector<double> tail(m + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const double room = j == 0 ? v[0] : v[j] - v[j - 1];
        if (room >= step)
            tail[j] = (g(shifted(j, step)) - g(shifted(j, -step))) / (2.0 * step);
        else
            tail[j] = (-3.0 * base + 4.0 * g(shifted(j, step)) - g(shifted(j, 2.0 * step))) / (2.0 * step);
    }
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j)
        out[j] = static_cast<double>(m) * (tail[j] - tail[j + 1]);
    return out;
}

HopfLaxResult hopf_lax(double t, const StepPath& q, const Mixture& xi, const HopfLaxOptions& opts)
{
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("t must be finite and nonnegative");
    HopfLaxResult out;
    const auto m = static_cast<std::size_t>(q.m());
    out.increment.assign(m, 0.0);
    out.value = psi_initial(q, opts.grid);
    if (t == 0.0)
        return out;

    auto value_at = [&](std::span<const double> inc) {
        std::vector<double> shifted(m);
        double cost = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            shifted[j] = q[j] + inc[j];
            cost += xi.dual(inc[j] / t);
        }
        return psi_initial(StepPath(std::move(shifted)), opts.grid) - t * cost / static_cast<double>(m);
    };
    auto objective = [&](std::span<const double> x) {
        const auto p = project_monotone_nonnegative(x);
        double penalty = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            penalty += (x[j] - p[j]) * (x[j] - p[j]);
        try {
            return -value_at(p) + 1e3 * penalty;
        } catch (const std::domain_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    // Fixed points of q' = t xi'(d psi(q + q')) are the stationary points. The map
    // moves every coordinate in the direction of the objective gradient, so a damped
    // version with backtracking is an ascent method.
    auto ascend = [&](std::vector<double> x, int& evaluations, bool& stationary) {
        double fx = value_at(x);
        ++evaluations;
        double lambda = 1.0;
        stationary = false;
        for (int it = 0; it < 400 && !stationary; ++it) {
            std::vector<double> shifted(m);
            for (std::size_t j = 0; j < m; ++j)
                shifted[j] = q[j] + x[j];
            const auto p = psi_gradient(StepPath(std::move(shifted)), opts.grid);
            std::vector<double> target(m);
            for (std::size_t j = 0; j < m; ++j)
                target[j] = t * xi.derivative(p[j]);
            double gap = 0.0;
            for (std::size_t j = 0; j < m; ++j)
                gap = std::max(gap, std::abs(target[j] - x[j]));
            if (gap < 1e-10) {
                stationary = true;
                break;
            }
            bool moved = false;
            for (; lambda >= 1.0 / 1024; lambda *= 0.5) {
                std::vector<double> y(m);
                for (std::size_t j = 0; j < m; ++j)
                    y[j] = x[j] + lambda * (target[j] - x[j]);
                y = project_monotone_nonnegative(y);
                double fy = -std::numeric_limits<double>::infinity();
                try {
                    fy = value_at(y);
                } catch (const std::domain_error&) {
                }
                ++evaluations;
                if (fy >= fx) {
                    moved = fy - fx > 1e-15 || lambda == 1.0;
                    x = std::move(y);
                    fx = fy;
                    break;
                }
            }
            if (!moved)
                break;
            lambda = std::min(1.0, 2.0 * lambda);
        }
        return x;
    };

    // Starts: zero, the ascent limit from zero, and jittered copies of it.
    std::vector<std::vector<double>> starts{std::vector<double>(m, 0.0)};
    int guess_evaluations = 0;
    bool guess_stationary = false;
    const auto guess = ascend(std::vector<double>(m, 0.0), guess_evaluations, guess_stationary);
    starts.push_back(guess);
    RandomStream rng(opts.seed, 0x484cu);
    const double scale = std::max(1e-3, 0.25 * (sup_norm(guess) + t));
    while (static_cast<int>(starts.size()) < opts.starts) {
        std::vector<double> x = guess;
        for (auto& v : x)
            v += scale * rng.gaussian();
        starts.push_back(project_monotone_nonnegative(x));
    }

    NelderMeadOptions nm;
    nm.ftol = opts.ftol;
    nm.max_evaluations = opts.max_evaluations;
    nm.initial_step = 0.1 * scale;
    nm.restarts = 0;
    std::vector<NelderMeadResult> results(starts.size());
    std::vector<int> extra(starts.size(), 0);
    std::vector<char> stationary(starts.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(starts.size()); ++s) {
        const auto i = static_cast<std::size_t>(s);
        bool st = false;
        auto x = i == 1 ? guess : ascend(starts[i], extra[i], st);
        if (i == 1)
            st = guess_stationary;
        stationary[i] = st;
        results[i] = nelder_mead(objective, x, nm);
    }

    out.evaluations = guess_evaluations;
    std::size_t best = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        out.evaluations += results[i].evaluations + extra[i];
        if (results[i].value < results[best].value)
            best = i;
    }
    const auto inc = project_monotone_nonnegative(results[best].x);
    const double v = value_at(inc);
    if (v > out.value) {
        out.value = v;
        out.increment = inc;
    }
    out.converged = results[best].converged || stationary[best];
    return out;
}

double hopf_lax_to_parisi(double f, double t, const Mixture& xi) { return -f + t * xi(1.0); }

namespace {

CharacteristicPrediction predict_single(const StepPath& q, double t, const Mixture& xi, const CascadeGrid& grid)
{
    CharacteristicPrediction out;
    out.t = t;
    const auto p = psi_gradient(q, grid);
    std::vector<double> target(p.size());
    double transport = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = xi.derivative(p[j]);
        target[j] = q[j] - t * d;
        transport += p[j] * d - xi(p[j]);
        out.feasible = out.feasible && target[j] >= 0.0;
    }
    out.predicted_value = psi_initial(q, grid) - t * transport / static_cast<double>(p.size());
    out.source = {q.values()};
    out.target = {std::move(target)};
    out.gradient = {p};
    return out;
}

CharacteristicPrediction predict_pair(const PathPair& q, double t, const CascadeGrid& grid)
{
    CharacteristicPrediction out;
    out.t = t;
    const auto p1 = psi_gradient(q.q1, grid);
    const auto p2 = psi_gradient(q.q2, grid);
    const std::size_t m = p1.size();
    std::vector<double> target1(m);
    std::vector<double> target2(m);
    double transport = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        target1[j] = q.q1[j] - t * p2[j];
        target2[j] = q.q2[j] - t * p1[j];
        transport += p1[j] * p2[j];
        out.feasible = out.feasible && target1[j] >= 0.0 && target2[j] >= 0.0;
    }
    out.predicted_value = psi_initial(q, grid) - t * transport / static_cast<double>(m);
    out.source = {q.q1.values(), q.q2.values()};
    out.target = {std::move(target1), std::move(target2)};
    out.gradient = {p1, p2};
    return out;
}

// Source as one flat vector of `layers` paths with m cells each.
struct LineProblem {
    int layers = 1;
    std::size_t m = 0;
    double t = 0.0;
    std::vector<double> target;  // flat
    std::function<CharacteristicPrediction(const std::vector<double>&)> predict;

    std::vector<double> residual(const CharacteristicPrediction& p) const
    {
        std::vector<double> r(target.size());
        for (int l = 0; l < layers; ++l)
            for (std::size_t j = 0; j < m; ++j)
                r[static_cast<std::size_t>(l) * m + j] =
                    p.target[static_cast<std::size_t>(l)][j] - target[static_cast<std::size_t>(l) * m + j];
        return r;
    }
    std::vector<double> project(std::span<const double> s) const
    {
        std::vector<double> out;
        for (int l = 0; l < layers; ++l) {
            const auto part = project_monotone_nonnegative(s.subspan(static_cast<std::size_t>(l) * m, m));
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
};

// Newton on increments d (s = cumulative sums per layer), so forward perturbations stay in the path space.
bool solve_line(const LineProblem& lp, std::vector<double> s, int max_iterations, double tolerance,
                CharacteristicPrediction& found)
{
    const std::size_t n = s.size();
    auto pred = lp.predict(s);
    auto f = lp.residual(pred);
    double norm = sup_norm(f);
    constexpr double eps = 1e-7;
    for (int it = 0; it < max_iterations; ++it) {
        if (norm <= tolerance) {
            pred.line_residual = norm;
            found = std::move(pred);
            return true;
        }
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t c = 0; c < n; ++c) {
            std::vector<double> sp = s;
            const std::size_t layer_end = (c / lp.m + 1) * lp.m;
            for (std::size_t i = c; i < layer_end; ++i)
                sp[i] += eps;
            const auto fp = lp.residual(lp.predict(sp));
            for (std::size_t r = 0; r < n; ++r)
                jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (fp[r] - f[r]) / eps;
        }
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r)
            rhs(static_cast<Eigen::Index>(r)) = -f[r];
        const Eigen::VectorXd dd = jac.fullPivLu().solve(rhs);
        std::vector<double> ds(n, 0.0);
        bool finite = dd.allFinite();
        for (std::size_t c = 0; c < n && finite; ++c) {
            const std::size_t layer_end = (c / lp.m + 1) * lp.m;
            for (std::size_t i = c; i < layer_end; ++i)
                ds[i] += dd(static_cast<Eigen::Index>(c));
        }
        bool improved = false;
        for (double lambda = 1.0; finite && lambda >= 1.0 / 64.0; lambda *= 0.5) {
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = s[i] + lambda * ds[i];
            trial = lp.project(trial);
            auto tp = lp.predict(trial);
            auto tf = lp.residual(tp);
            const double tn = sup_norm(tf);
            if (tn < norm) {
                s = std::move(trial);
                pred = std::move(tp);
                f = std::move(tf);
                norm = tn;
                improved = true;
                break;
            }
        }
        if (!improved) {
            // Damped fixed-point step s <- target + t grad xi(p(s)).
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = s[i] - 0.5 * f[i];
            trial = lp.project(trial);
            pred = lp.predict(trial);
            f = lp.residual(pred);
            const double tn = sup_norm(f);
            if (!(tn < norm))
                return false;
            s = std::move(trial);
            norm = tn;
        }
    }
    return false;
}

CharacteristicSet search_lines(const LineProblem& lp, double slope_bound, const CharacteristicSearch& search)
{
    std::vector<std::vector<double>> starts;
    // Corner starts: each layer either at the target or shifted by the largest possible move.
    for (int mask = 0; mask < (1 << lp.layers); ++mask) {
        std::vector<double> s = lp.target;
        for (int l = 0; l < lp.layers; ++l)
            if (mask & (1 << l))
                for (std::size_t j = 0; j < lp.m; ++j)
                    s[static_cast<std::size_t>(l) * lp.m + j] += lp.t * slope_bound;
        starts.push_back(lp.project(s));
    }
    RandomStream rng(search.seed, 0x4348u);
    for (int r = 0; r < search.random_starts; ++r) {
        std::vector<double> s = lp.target;
        for (int l = 0; l < lp.layers; ++l) {
            std::vector<double> u(lp.m);
            for (auto& x : u)
                x = rng.uniform();
            std::sort(u.begin(), u.end());
            for (std::size_t j = 0; j < lp.m; ++j)
                s[static_cast<std::size_t>(l) * lp.m + j] += lp.t * slope_bound * u[j];
        }
        starts.push_back(lp.project(s));
    }

    std::vector<CharacteristicPrediction> found(starts.size());
    std::vector<char> ok(starts.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(starts.size()); ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            ok[idx] = solve_line(lp, starts[idx], search.max_iterations, search.tolerance, found[idx]) ? 1 : 0;
        } catch (const std::exception&) {
            ok[idx] = 0;
        }
    }

    CharacteristicSet out;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        if (!ok[k])
            continue;
        bool duplicate = false;
        for (const auto& p : out.predictions) {
            double d = 0.0;
            for (std::size_t l = 0; l < p.source.size(); ++l)
                for (std::size_t j = 0; j < lp.m; ++j)
                    d = std::max(d, std::abs(p.source[l][j] - found[k].source[l][j]));
            if (d <= search.dedup) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate)
            out.predictions.push_back(std::move(found[k]));
    }
    std::stable_sort(out.predictions.begin(), out.predictions.end(),
                     [](const auto& a, const auto& b) { return a.predicted_value < b.predicted_value; });
    if (out.predictions.empty())
        out.diagnostic = "no characteristic found within the iteration budget; the target may be unreachable on this grid";
    return out;
}

void check_time(double t)
{
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("characteristic search needs t > 0");
}

}  // namespace

CharacteristicPrediction characteristic_predict(const StepPath& q, double t, const Mixture& xi,
                                                const CascadeGrid& grid)
{
    if (!(t >= 0.0))
        throw std::invalid_argument("t must be nonnegative");
    return predict_single(q, t, xi, grid);
}

CharacteristicPrediction characteristic_predict(const PathPair& q, double t, const CascadeGrid& grid)
{
    if (!(t >= 0.0))
        throw std::invalid_argument("t must be nonnegative");
    return predict_pair(q, t, grid);
}

CharacteristicSet characteristics_through(double t, const StepPath& target, const Mixture& xi,
                                          const CharacteristicSearch& search)
{
    check_time(t);
    LineProblem lp;
    lp.layers = 1;
    lp.m = static_cast<std::size_t>(target.m());
    lp.t = t;
    lp.target = target.values();
    lp.predict = [&](const std::vector<double>& s) { return predict_single(StepPath(s), t, xi, search.grid); };
    return search_lines(lp, xi.derivative(1.0), search);
}

CharacteristicSet characteristics_through(double t, const PathPair& target, const CharacteristicSearch& search)
{
    check_time(t);
    LineProblem lp;
    lp.layers = 2;
    lp.m = static_cast<std::size_t>(target.m());
    lp.t = t;
    lp.target = target.q1.values();
    lp.target.insert(lp.target.end(), target.q2.values().begin(), target.q2.values().end());
    const std::size_t m = lp.m;
    lp.predict = [&, m](const std::vector<double>& s) {
        PathPair q(StepPath(std::vector<double>(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m))),
                   StepPath(std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(m), s.end())));
        return predict_pair(q, t, search.grid);
    };
    return search_lines(lp, 1.0, search);
}

namespace {

template <class F>
double time_derivative(F&& f, double t, double dt)
{
    if (t >= dt)
        return (f(t + dt) - f(t - dt)) / (2.0 * dt);
    return (-3.0 * f(t) + 4.0 * f(t + dt) - f(t + 2.0 * dt)) / (2.0 * dt);
}

void check_spacing(double dt, double dq)
{
    if (!(dt > 0.0) || !(dq > 0.0))
        throw std::invalid_argument("stencil spacings must be positive");
    if (dt > 0.1 || dq > 0.1)
        throw std::invalid_argument("stencil too coarse: spacings must not exceed 0.1");
}

}  // namespace

double hj_residual(const std::function<double(double, const StepPath&)>& f, double t, const StepPath& q,
                   const Mixture& xi, double dt, double dq)
{
    check_spacing(dt, dq);
    const double ft = time_derivative([&](double s) { return f(s, q); }, t, dt);
    const auto p = path_gradient([&](const StepPath& path) { return f(t, path); }, q, dq);
    double acc = 0.0;
    for (double x : p)
        acc += xi(x);
    return ft - acc / static_cast<double>(p.size());
}

double hj_residual(const std::function<double(double, const PathPair&)>& f, double t, const PathPair& q,
                   double dt, double dq)
{
    check_spacing(dt, dq);
    const double ft = time_derivative([&](double s) { return f(s, q); }, t, dt);
    const auto p1 = path_gradient([&](const StepPath& path) { return f(t, PathPair(path, q.q2)); }, q.q1, dq);
    const auto p2 = path_gradient([&](const StepPath& path) { return f(t, PathPair(q.q1, path)); }, q.q2, dq);
    double acc = 0.0;
    for (std::size_t j = 0; j < p1.size(); ++j)
        acc += p1[j] * p2[j];
    return ft - acc / static_cast<double>(p1.size());
}

double hj_residual(const ConstantPathStencil& s, const HjModel& model)
{
    if (!(s.dt > 0.0) || !(s.dh > 0.0))
        throw std::invalid_argument("stencil spacings must be positive");
    const double ft = (s.f_t_plus - s.f_t_minus) / (2.0 * s.dt);
    const double fh = (s.f_h_plus - s.f_h_minus) / (2.0 * s.dh);
    if (model.bipartite)
        return ft - fh * (s.f_h2_plus - s.f_h2_minus) / (2.0 * s.dh);
    return ft - model.xi(fh);
}

}  // namespace spinglass
