#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <cstring>

#include "spinglass/kernels.hpp"
#include "spinglass/quadrature.hpp"
#include "spinglass/random.hpp"

using namespace spinglass;
namespace k = spinglass::kernels;

namespace {

// Runs f once per thread count and requires bit-identical outputs.
template <class F>
auto same_for_thread_counts(F f)
{
    omp_set_num_threads(1);
    const auto one = f();
    for (int t : {2, 3, 8}) {
        omp_set_num_threads(t);
        const auto other = f();
        REQUIRE(other.size() == one.size());
        CHECK(std::memcmp(other.data(), one.data(), one.size() * sizeof(one[0])) == 0);
    }
    omp_set_num_threads(1);
    return one;
}

std::vector<double> gibbs_vector(std::size_t n, RandomStream& rng)
{
    std::vector<double> g(n);
    double total = 0.0;
    for (auto& x : g) {
        x = std::exp(2.0 * rng.gaussian());
        total += x;
    }
    for (auto& x : g)
        x /= total;
    return g;
}

}  // namespace

TEST_CASE("energy table: omp matches serial")
{
    RandomStream rng(3);
    for (const auto& spec : {ModelSpec::sk(11), ModelSpec::bipartite(6),
                             ModelSpec::single_type(Mixture({0.0, 1.0, 0.5}), 7)}) {
        const auto c = sample_couplings(spec, rng);
        const std::size_t size = std::size_t{1} << spec.config_length();
        std::vector<double> ref(size);
        k::serial::energy_table(c, ref);
        const auto got = same_for_thread_counts([&] {
            std::vector<double> out(size);
            k::omp::energy_table(c, out);
            return out;
        });
        double worst = 0.0;
        for (std::size_t i = 0; i < size; ++i)
            worst = std::max(worst, std::abs(got[i] - ref[i]));
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("log-sum-exp: omp matches serial")
{
    RandomStream rng(4);
    std::vector<double> x(50000);
    for (auto& v : x)
        v = 30.0 * rng.gaussian();
    const double ref = k::serial::log_sum_exp(x, 0.7);
    omp_set_num_threads(1);
    const double one = k::omp::log_sum_exp(x, 0.7);
    omp_set_num_threads(8);
    const double eight = k::omp::log_sum_exp(x, 0.7);
    omp_set_num_threads(1);
    CHECK(one == eight);
    CHECK(one == doctest::Approx(ref).epsilon(1e-13));
    CHECK(k::serial::log_sum_exp(std::vector<double>(4, 0.0)) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("bipartite layer sums: omp matches serial")
{
    RandomStream rng(5);
    const int n = 7;
    const auto c = sample_couplings(ModelSpec::bipartite(n), rng);
    std::vector<double> f1(n), f2(n);
    for (auto& v : f1)
        v = rng.gaussian();
    for (auto& v : f2)
        v = rng.gaussian();
    std::vector<double> ref(std::size_t{1} << n);
    k::serial::bipartite_layer_sums(c, 0.8, f1, f2, ref);
    const auto got = same_for_thread_counts([&] {
        std::vector<double> out(std::size_t{1} << n);
        k::omp::bipartite_layer_sums(c, 0.8, f1, f2, out);
        return out;
    });
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("xor autocorrelation: transform matches the quadratic sum")
{
    RandomStream rng(6);
    const auto g = gibbs_vector(std::size_t{1} << 9, rng);
    std::vector<double> ref(g.size());
    k::serial::xor_autocorrelation(g, ref);
    const auto got = same_for_thread_counts([&] {
        std::vector<double> out(g.size());
        k::omp::xor_autocorrelation(g, out);
        return out;
    });
    double total = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-10).scale(1e-12));
        total += got[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("triple distance table: omp matches serial")
{
    RandomStream rng(7);
    const int length = 6;
    const auto g = gibbs_vector(std::size_t{1} << length, rng);
    const auto ref = k::serial::triple_distances(g, length);
    const auto got = same_for_thread_counts([&] { return k::omp::triple_distances(g, length).mass; });
    double total = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i] == doctest::Approx(ref.mass[i]).epsilon(1e-12).scale(1e-15));
        total += got[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cascade step: omp matches serial and integrates exactly")
{
    k::GridTable lower_ref, lower;
    const int n = 801;
    for (auto* t : {&lower_ref, &lower}) {
        t->x0 = -8.0;
        t->dx = 0.02;
        t->value.assign(n, 0.0);
        t->slope.assign(n, 0.0);
    }
    const auto& rule = normal_rule(40);
    k::serial::cascade_step(nullptr, 0.6, 0.5, rule, lower_ref);
    const auto got = same_for_thread_counts([&] {
        k::omp::cascade_step(nullptr, 0.6, 0.5, rule, lower);
        return lower.value;
    });
    for (int i = 0; i < n; ++i)
        CHECK(got[static_cast<std::size_t>(i)] == lower_ref.value[static_cast<std::size_t>(i)]);

    // zeta = 1 on log cosh: log E cosh(x + sd Z) = log cosh x + sd^2 / 2.
    k::serial::cascade_step(nullptr, 0.6, 1.0, rule, lower_ref);
    for (int i = 100; i < n - 100; i += 50) {
        const double x = lower_ref.x(static_cast<std::size_t>(i));
        CHECK(lower_ref.value[static_cast<std::size_t>(i)] ==
              doctest::Approx(k::log_cosh(x) + 0.18).epsilon(1e-12));
        CHECK(lower_ref.slope[static_cast<std::size_t>(i)] == doctest::Approx(std::tanh(x)).epsilon(1e-10));
    }
}

TEST_CASE("normal rule integrates Gaussian moments")
{
    for (int order : {5, 10, 40, 128}) {
        const auto& r = normal_rule(order);
        double m0 = 0.0, m2 = 0.0, m4 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double z = r.nodes[i];
            m0 += r.weights[i];
            m1 += r.weights[i] * z;
            m2 += r.weights[i] * z * z;
            m4 += r.weights[i] * z * z * z * z;
        }
        CHECK(m0 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(m1) <= 1e-13);
        CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m4 == doctest::Approx(3.0).epsilon(1e-11));
    }
    CHECK_THROWS(normal_rule(0));
    CHECK_THROWS(normal_rule(129));
}

TEST_CASE("interpolation reproduces smooth functions")
{
    k::GridTable t;
    t.x0 = -3.0;
    t.dx = 0.02;
    for (int i = 0; i <= 300; ++i) {
        const double x = t.x0 + t.dx * i;
        t.value.push_back(std::sin(x));
        t.slope.push_back(std::cos(x));
    }
    double v = 0.0, s = 0.0;
    for (double x : {-2.511, -0.003, 0.7777, 2.9}) {
        k::evaluate(t, x, v, s);
        CHECK(v == doctest::Approx(std::sin(x)).epsilon(1e-9));
        CHECK(s == doctest::Approx(std::cos(x)).epsilon(1e-7));
    }
    // Linear extrapolation beyond the grid.
    k::evaluate(t, 4.0, v, s);
    CHECK(v == doctest::Approx(std::sin(3.0) + std::cos(3.0)));
    CHECK(k::log_cosh(1000.0) == doctest::Approx(1000.0 - std::log(2.0)));
}
