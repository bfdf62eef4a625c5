#include <doctest.h>

#include <cmath>

#include "spinglass/optimize.hpp"
#include "spinglass/random.hpp"

using namespace spinglass;

namespace {

// Isotonic regression by the min-max formula: fit_i = max_{a<=i} min_{b>=i} mean(x[a..b]).
std::vector<double> isotonic_oracle(const std::vector<double>& x)
{
    const std::size_t n = x.size();
    std::vector<double> fit(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1e300;
        for (std::size_t a = 0; a <= i; ++a) {
            double low = 1e300;
            for (std::size_t b = i; b < n; ++b) {
                double sum = 0.0;
                for (std::size_t k = a; k <= b; ++k)
                    sum += x[k];
                low = std::min(low, sum / static_cast<double>(b - a + 1));
            }
            best = std::max(best, low);
        }
        fit[i] = std::max(best, 0.0);
    }
    return fit;
}

}  // namespace

TEST_CASE("Nelder-Mead minimizes the Rosenbrock function")
{
    auto rosen = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    NelderMeadOptions o;
    o.ftol = 1e-14;
    const auto r = nelder_mead(rosen, {-1.2, 1.0}, o);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(r.value <= 1e-8);
}

TEST_CASE("Nelder-Mead on a shifted quadratic in several dimensions")
{
    auto f = [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            s += (i + 1.0) * (x[i] - 0.1 * i) * (x[i] - 0.1 * i);
        return s;
    };
    NelderMeadOptions o;
    o.ftol = 1e-14;
    const auto r = nelder_mead(f, std::vector<double>(6, 1.0), o);
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(r.x[i] == doctest::Approx(0.1 * i).scale(1.0).epsilon(1e-4));

    o.max_evaluations = 20;
    CHECK_FALSE(nelder_mead(f, std::vector<double>(6, 1.0), o).converged);
}

TEST_CASE("monotone projection agrees with the min-max formula")
{
    RandomStream rng(33);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x(1 + rng.index(8));
        for (auto& v : x)
            v = rng.gaussian();
        const auto got = project_monotone_nonnegative(x);
        const auto want = isotonic_oracle(x);
        REQUIRE(got.size() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12).scale(1.0));
            CHECK(got[i] >= 0.0);
            if (i > 0)
                CHECK(got[i] >= got[i - 1]);
        }
    }
}

TEST_CASE("monotone projection fixes already feasible input")
{
    const std::vector<double> x{0.0, 0.1, 0.1, 0.7};
    CHECK(project_monotone_nonnegative(x) == x);
    CHECK(project_monotone_nonnegative(std::vector<double>{2.0, 0.0}) == std::vector<double>{1.0, 1.0});
}
