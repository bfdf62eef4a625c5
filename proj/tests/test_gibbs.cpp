#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "oracles.hpp"
#include "spinglass/exactmodel.hpp"
#include "spinglass/gibbs.hpp"

using namespace spinglass;

namespace {

std::vector<double> energies(const CouplingSample& c)
{
    const std::vector<double> w(c.matrix().begin(), c.matrix().end());
    std::vector<double> e;
    const int l = c.config_length();
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << l); ++i)
        e.push_back(c.is_bipartite() ? oracle::bipartite_energy(w, oracle::spins(i, l))
                                     : oracle::sk_energy(w, oracle::spins(i, l)));
    return e;
}

}  // namespace

TEST_CASE("inverse temperature examples")
{
    const std::vector<double> two{-1.0, 1.0};
    CHECK(std::abs(inverse_temperature(two, 0.0)) <= 1e-10);
    CHECK(inverse_temperature(two, -std::tanh(1.0)) == doctest::Approx(1.0).epsilon(1e-9));
    const std::vector<double> three{0.0, 1.0, 2.0};
    CHECK(std::abs(inverse_temperature(three, 1.0)) <= 1e-10);
    CHECK_THROWS(inverse_temperature(two, 1.0));
    CHECK_THROWS(inverse_temperature(two, -1.5));
}

TEST_CASE("inverse temperature round trip")
{
    const std::vector<double> levels{-2.0, -0.5, 0.1, 0.3, 1.7, 2.2};
    for (int i = 0; i <= 24; ++i) {
        const double beta = -3.0 + 0.25 * i;
        const double target = mean_energy(levels, beta);
        CHECK(inverse_temperature(levels, target) == doctest::Approx(beta).epsilon(1e-8).scale(1.0));
        CHECK(std::abs(mean_energy(levels, inverse_temperature(levels, target)) - target) < 1e-10);
    }
}

TEST_CASE("exact overlap law at beta = 0 is binomial")
{
    RandomStream rng(1);
    const int n = 10;
    const auto s = overlap_distribution_exact(sample_couplings(ModelSpec::sk(n), rng), 0.0);
    REQUIRE(s.mass.size() == n + 1);
    double total = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double binom = std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0));
        CHECK(s.mass[static_cast<std::size_t>(k)] == doctest::Approx(binom / 1024.0).epsilon(1e-12));
        total += s.mass[static_cast<std::size_t>(k)];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.edges.front() <= -1.0);
    CHECK(s.edges.back() >= 1.0);
    CHECK(std::abs(s.first_moment) <= 1e-14);
}

TEST_CASE("exact overlap law matches the pair enumeration")
{
    RandomStream rng(2);
    for (const auto& spec : {ModelSpec::sk(6), ModelSpec::bipartite(3)}) {
        const auto c = sample_couplings(spec, rng);
        const int l = spec.config_length();
        const auto law = oracle::overlap_law(oracle::gibbs(energies(c), 1.5), l);
        const auto s = overlap_distribution_exact(c, 1.5);
        for (int k = 0; k <= l; ++k)
            CHECK(s.mass[static_cast<std::size_t>(k)] ==
                  doctest::Approx(law[static_cast<std::size_t>(k)]).epsilon(1e-10).scale(1e-14));
        CHECK(s.first_moment >= 0.0);
        CHECK(s.second_moment >= s.first_moment * s.first_moment - 1e-9);
    }
    CHECK_THROWS(overlap_distribution_exact(sample_couplings(ModelSpec::sk(14), rng), 1.0));
}

TEST_CASE("exact second moment equals the enumeration Gibbs average")
{
    RandomStream rng(3);
    for (int n : {5, 8, 11}) {
        const auto c = sample_couplings(ModelSpec::sk(n), rng);
        const auto s = overlap_distribution_exact(c, 1.1);
        const auto g = gibbs_overlap_moments(c, 1.1);
        CHECK(std::abs(s.second_moment - g.mean_sq_overlap) <= 1e-10);
        CHECK(std::abs(s.first_moment - g.mean_overlap) <= 1e-10);
    }
}

TEST_CASE("ultrametric defect examples")
{
    const Configuration a{1, 1, 1, 1};
    CHECK(ultrametric_defect(a, a, a) == 0.0);
    const Configuration b{-1, -1, -1, -1}, c{1, 1, -1, -1};
    CHECK(ultrametric_defect(a, b, c) == doctest::Approx((4.0 - 2.0 * std::sqrt(2.0)) / 2.0));
    CHECK(ultrametric_defect(a, b, c) == doctest::Approx(0.5857864376).epsilon(1e-9));
}

TEST_CASE("ultrametric defect is permutation invariant")
{
    RandomStream rng(4);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<Configuration> x(3, Configuration(9));
        for (auto& s : x)
            for (auto& v : s)
                v = static_cast<Spin>(rng.spin());
        const double d = ultrametric_defect(x[0], x[1], x[2]);
        CHECK(d >= 0.0);
        std::vector<int> p{0, 1, 2};
        while (std::next_permutation(p.begin(), p.end()))
            CHECK(ultrametric_defect(x[static_cast<std::size_t>(p[0])], x[static_cast<std::size_t>(p[1])],
                                     x[static_cast<std::size_t>(p[2])]) == doctest::Approx(d).epsilon(1e-14));
    }
    CHECK_THROWS(ultrametric_defects_exact(CouplingSample::sk(1, {0.0}), 1.0, 0.0));
}

TEST_CASE("exact triple statistics match brute force")
{
    RandomStream rng(5);
    const int n = 4;
    const auto c = sample_couplings(ModelSpec::sk(n), rng);
    const auto g = oracle::gibbs(energies(c), 1.3);
    double violation = 0.0;
    for (std::uint64_t a = 0; a < 16; ++a)
        for (std::uint64_t b = 0; b < 16; ++b)
            for (std::uint64_t d = 0; d < 16; ++d)
                if (oracle::defect(oracle::spins(a, n), oracle::spins(b, n), oracle::spins(d, n)) > 0.3 + 1e-12)
                    violation += g[a] * g[b] * g[d];
    const auto s = ultrametric_defects_exact(c, 1.3, 0.3);
    CHECK(s.violation_fraction == doctest::Approx(violation).epsilon(1e-12));
    CHECK(s.quantiles.size() == 3);
    CHECK(s.violation_fraction >= 0.0);
    CHECK(s.violation_fraction <= 1.0);
    CHECK_THROWS(ultrametric_defects_exact(sample_couplings(ModelSpec::sk(9), rng), 1.0, 0.5));
}

TEST_CASE("mcmc chains are reproducible and thread independent")
{
    RandomStream rng(6);
    const auto c = sample_couplings(ModelSpec::sk(7), rng);
    McmcOptions o;
    o.sweeps = 2000;
    o.n_replicas = 3;
    o.tempering = true;
    omp_set_num_threads(1);
    const auto a = mcmc_chain(c, 1.0, o, RandomStream(10));
    omp_set_num_threads(4);
    const auto b = mcmc_chain(c, 1.0, o, RandomStream(10));
    omp_set_num_threads(1);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size()) == 0);
    CHECK(a.n_samples() == 1600);
    o.n_replicas = 4;
    CHECK_THROWS(mcmc_chain(c, 1.0, o, RandomStream(10)));
    o.n_replicas = 2;
    CHECK_THROWS(mcmc_chain(c, -1.0, o, RandomStream(10)));
}

TEST_CASE("mcmc at beta = 0 samples uniformly")
{
    RandomStream rng(7);
    const auto c = sample_couplings(ModelSpec::sk(8), rng);
    McmcOptions o;
    o.sweeps = 20000;
    const auto s = overlap_distribution_mcmc(c, 0.0, o, RandomStream(11));
    CHECK(std::abs(s.first_moment) <= 3.0 * s.first_std_error + 1e-12);
    CHECK(std::abs(s.second_moment - 1.0 / 8.0) <= 3.0 * s.second_std_error);
}

TEST_CASE("mcmc overlap moments agree with exact enumeration at beta = 2")
{
    RandomStream rng(8);
    const auto c = sample_couplings(ModelSpec::sk(8), rng);
    McmcOptions o;
    o.sweeps = 200000;
    o.n_replicas = 3;
    o.tempering = true;
    const auto samples = mcmc_chain(c, 2.0, o, RandomStream(12));
    const auto mc = overlap_from_samples(samples);
    const auto ex = overlap_distribution_exact(c, 2.0);
    CHECK(std::abs(mc.first_moment - ex.first_moment) <= 3.0 * mc.first_std_error);
    CHECK(std::abs(mc.second_moment - ex.second_moment) <= 3.0 * mc.second_std_error);
    CHECK(total_variation(mc, ex) <= 0.05);

    const auto dm = defects_from_samples(samples, 0.5);
    const auto de = ultrametric_defects_exact(c, 2.0, 0.5);
    CHECK(std::abs(dm.violation_fraction - de.violation_fraction) <= 3.0 * dm.violation_std_error + 1e-12);
}

TEST_CASE("batch standard error of an independent series")
{
    RandomStream rng(9);
    std::vector<double> x(64000);
    for (auto& v : x)
        v = rng.gaussian();
    CHECK(batch_standard_error(x) == doctest::Approx(1.0 / std::sqrt(64000.0)).epsilon(0.35));
}
