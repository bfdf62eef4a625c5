#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spinglass/parisi.hpp"
#include "spinglass/random.hpp"

using namespace spinglass;

TEST_CASE("measure construction and cdf")
{
    CHECK(measure_cdf(AtomicMeasure::dirac(1.0), 0.5) == 0.0);
    CHECK(measure_cdf(AtomicMeasure::dirac(0.0), 0.0) == 1.0);
    CHECK(measure_cdf(AtomicMeasure::dirac(0.0), 0.7) == 1.0);
    const AtomicMeasure two({0.2, 0.8}, {0.5, 0.5});
    CHECK(measure_cdf(two, 0.5) == doctest::Approx(0.5));
    CHECK(measure_cdf(two, 0.2) == doctest::Approx(0.5));
    CHECK(measure_cdf(two, 0.19) == 0.0);
    CHECK_THROWS(measure_cdf(two, 1.5));
    CHECK_THROWS(AtomicMeasure({0.5, 0.2}, {0.5, 0.5}));
    CHECK_THROWS(AtomicMeasure({0.2, 0.5}, {0.5, 0.6}));
    CHECK_THROWS(AtomicMeasure({0.2, 1.5}, {0.5, 0.5}));
    CHECK_THROWS(AtomicMeasure({0.2}, {0.0}));
    CHECK_THROWS(AtomicMeasure({}, {}));
}

TEST_CASE("Phi at beta = 0 is log cosh(0)")
{
    const AtomicMeasure mu({0.3, 0.6}, {0.4, 0.6});
    CHECK(phi_recursive(mu, 0.0) == 0.0);
    CHECK(parisi_pde_fd(mu, 0.0, PdeConfig::defaults(0.0)) == 0.0);
    CHECK(parisi_functional(mu, 0.0) == doctest::Approx(oracle::kLog2).epsilon(1e-14));
}

TEST_CASE("Phi closed forms")
{
    const double beta = 0.3;
    CHECK(phi_recursive(AtomicMeasure::dirac(0.0), beta) == doctest::Approx(beta * beta).epsilon(1e-8));
    CHECK(std::abs(phi_recursive(AtomicMeasure::dirac(0.0), beta) - 0.09) <= 1e-8);
    CHECK(std::abs(parisi_pde_fd(AtomicMeasure::dirac(0.0), beta, PdeConfig::defaults(beta)) - 0.09) <= 1e-5);

    const double d1 = oracle::gauss([](double x) { return oracle::log_cosh(x); }, beta * std::sqrt(2.0));
    CHECK(d1 == doctest::Approx(0.0839).epsilon(1e-3));
    CHECK(std::abs(phi_recursive(AtomicMeasure::dirac(1.0), beta) - d1) <= 1e-8);
    CHECK(std::abs(parisi_pde_fd(AtomicMeasure::dirac(1.0), beta, PdeConfig::defaults(beta)) - d1) <= 1e-5);

    CHECK(parisi_functional(AtomicMeasure::dirac(0.0), beta) ==
          doctest::Approx(oracle::kLog2 + 0.045).epsilon(1e-10));
    CHECK(parisi_functional(AtomicMeasure::dirac(1.0), beta) == doctest::Approx(oracle::kLog2 + d1).epsilon(1e-10));
}

TEST_CASE("Phi for one and two atoms against nested Gaussian integrals")
{
    for (double beta : {0.5, 1.0, 1.4})
        for (double q : {0.1, 0.45, 0.9})
            CHECK(std::abs(phi_recursive(AtomicMeasure::dirac(q), beta, 128) - oracle::phi_one_atom(q, beta)) <= 1e-7);
    for (double beta : {0.6, 1.2}) {
        const double expected = oracle::phi_two_atoms(0.2, 0.35, 0.7, beta);
        CHECK(std::abs(phi_recursive(AtomicMeasure({0.2, 0.7}, {0.35, 0.65}), beta, 60) - expected) <= 1e-6);
        CHECK(std::abs(parisi_pde_fd(AtomicMeasure({0.2, 0.7}, {0.35, 0.65}), beta, PdeConfig::defaults(beta)) -
                       expected) <= 1e-4);
    }
}

TEST_CASE("finite differences converge at first order or better")
{
    const AtomicMeasure mu({0.25, 0.6}, {0.5, 0.5});
    const double beta = 0.8;
    auto solve = [&](int refine) {
        PdeConfig cfg = PdeConfig::defaults(beta);
        cfg.half_width = 8.0;
        cfg.nx = 200 * refine + 1;
        cfg.nt = 100 * refine;
        return parisi_pde_fd(mu, beta, cfg);
    };
    const double a = solve(1), b = solve(2), c = solve(4);
    CHECK(std::abs(c - b) <= 4.0 * std::abs(b - a));
    CHECK(std::abs(c - phi_recursive(mu, beta, 60)) <= 1e-3);
}

TEST_CASE("solvers agree on random measures")
{
    RandomStream rng(2718);
    for (int i = 0; i < 6; ++i) {
        const int k = 1 + static_cast<int>(rng.index(3));
        std::vector<double> atoms, weights;
        for (int j = 0; j < k; ++j) {
            atoms.push_back(rng.uniform());
            weights.push_back(0.1 + rng.uniform());
        }
        double total = 0.0;
        for (double w : weights)
            total += w;
        for (auto& w : weights)
            w /= total;
        const auto mu = AtomicMeasure::canonical(atoms, weights);
        const double beta = 0.2 + 0.5 * rng.uniform();
        CHECK(std::abs(parisi_pde_fd(mu, beta, PdeConfig::defaults(beta)) - phi_recursive(mu, beta)) <= 1e-3);
    }
}

TEST_CASE("functional is invariant under duplicate and zero-weight atoms")
{
    const double beta = 0.9;
    const double base = parisi_functional(AtomicMeasure({0.3, 0.7}, {0.4, 0.6}), beta);
    CHECK(parisi_functional(AtomicMeasure::canonical({0.3, 0.7, 0.3}, {0.1, 0.6, 0.3}), beta) ==
          doctest::Approx(base).epsilon(1e-10));
    CHECK(parisi_functional(AtomicMeasure::canonical({0.3, 0.5, 0.7}, {0.4, 0.0, 0.6}), beta) ==
          doctest::Approx(base).epsilon(1e-10));
    const auto c = AtomicMeasure::canonical({0.7, 0.3, 0.3}, {0.5, 0.25, 0.25});
    CHECK(c.size() == 2);
    CHECK(c.atoms()[0] == 0.3);
    CHECK(c.weights()[0] == doctest::Approx(0.5));
}

TEST_CASE("pde config validation")
{
    PdeConfig cfg;
    cfg.nx = 8;
    CHECK_THROWS(cfg.validate());
    cfg = PdeConfig{};
    cfg.half_width = 2.0;
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS(phi_recursive(AtomicMeasure::dirac(0.5), 1.0, 5));
    const auto d = PdeConfig::defaults(1.5);
    CHECK(d.half_width >= 4.0 * 1.5 * std::sqrt(2.0) + 4.0 - 1e-9);
    CHECK(1.5 * 1.5 * (1.0 / d.nt) / d.dx() <= 0.5 + 1e-12);
}

TEST_CASE("replica symmetric minimization at high temperature")
{
    ParisiOptions opts;
    opts.starts = 4;
    const auto r = minimize_parisi(0.3, 1, opts);
    CHECK(r.value == doctest::Approx(oracle::kLog2 + 0.045).epsilon(1e-6));
    CHECK(r.starts.size() == 4);
    CHECK(r.converged);
    CHECK_THROWS(minimize_parisi(0.3, 0, opts));
}

TEST_CASE("one more atom never increases the minimum")
{
    ParisiOptions opts;
    opts.starts = 3;
    const auto one = minimize_parisi(1.0, 1, opts);
    opts.warm_atoms = one.measure.atoms();
    opts.warm_weights = one.measure.weights();
    const auto two = minimize_parisi(1.0, 2, opts);
    CHECK(two.value <= one.value + 1e-5);
    // Below the replica-symmetric value at beta = 1.
    CHECK(one.value < oracle::kLog2 + 0.5);
}
