#include <benchmark/benchmark.h>

#include <omp.h>

#include <cmath>
#include <vector>

#include "spinglass/kernels.hpp"
#include "spinglass/quadrature.hpp"
#include "spinglass/random.hpp"

using namespace spinglass;
namespace k = spinglass::kernels;

namespace {

std::vector<double> gibbs_vector(std::size_t n)
{
    RandomStream rng(1);
    std::vector<double> g(n);
    double total = 0.0;
    for (auto& x : g) {
        x = std::exp(rng.gaussian());
        total += x;
    }
    for (auto& x : g)
        x /= total;
    return g;
}

// Second argument: 0 runs the serial reference, otherwise the OpenMP kernel with that many threads.
void set_threads(const benchmark::State& state)
{
    if (state.range(1) > 0)
        omp_set_num_threads(static_cast<int>(state.range(1)));
}

void BM_EnergyTable(benchmark::State& state)
{
    set_threads(state);
    RandomStream rng(2);
    const auto c = sample_couplings(ModelSpec::sk(static_cast<int>(state.range(0))), rng);
    std::vector<double> out(std::size_t{1} << state.range(0));
    for (auto _ : state) {
        if (state.range(1) == 0)
            k::serial::energy_table(c, out);
        else
            k::omp::energy_table(c, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_LogSumExp(benchmark::State& state)
{
    set_threads(state);
    RandomStream rng(3);
    std::vector<double> x(std::size_t{1} << state.range(0));
    for (auto& v : x)
        v = 5.0 * rng.gaussian();
    for (auto _ : state)
        benchmark::DoNotOptimize(state.range(1) == 0 ? k::serial::log_sum_exp(x, 0.8) : k::omp::log_sum_exp(x, 0.8));
}

void BM_XorAutocorrelation(benchmark::State& state)
{
    set_threads(state);
    const auto g = gibbs_vector(std::size_t{1} << state.range(0));
    std::vector<double> out(g.size());
    for (auto _ : state) {
        if (state.range(1) == 0)
            k::serial::xor_autocorrelation(g, out);
        else
            k::omp::xor_autocorrelation(g, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_TripleDistances(benchmark::State& state)
{
    set_threads(state);
    const int length = static_cast<int>(state.range(0));
    const auto g = gibbs_vector(std::size_t{1} << length);
    for (auto _ : state) {
        auto t = state.range(1) == 0 ? k::serial::triple_distances(g, length) : k::omp::triple_distances(g, length);
        benchmark::DoNotOptimize(t.mass.data());
    }
}

void BM_CascadeStep(benchmark::State& state)
{
    set_threads(state);
    k::GridTable lower;
    lower.x0 = -10.0;
    lower.dx = 20.0 / static_cast<double>(state.range(0) - 1);
    lower.value.assign(static_cast<std::size_t>(state.range(0)), 0.0);
    lower.slope.assign(lower.value.size(), 0.0);
    const auto& rule = normal_rule(40);
    for (auto _ : state) {
        if (state.range(1) == 0)
            k::serial::cascade_step(nullptr, 0.5, 0.5, rule, lower);
        else
            k::omp::cascade_step(nullptr, 0.5, 0.5, rule, lower);
        benchmark::DoNotOptimize(lower.value.data());
    }
}

void thread_sweep(benchmark::internal::Benchmark* b, std::initializer_list<long> sizes)
{
    const long cores = omp_get_num_procs();
    for (long n : sizes) {
        b->Args({n, 0});
        for (long t = 1; t <= cores; t *= 2)
            b->Args({n, t});
    }
    b->ArgNames({"n", "threads"});
    b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_EnergyTable)->Apply([](auto* b) { thread_sweep(b, {12, 16}); });
BENCHMARK(BM_LogSumExp)->Apply([](auto* b) { thread_sweep(b, {16, 20}); });
BENCHMARK(BM_XorAutocorrelation)->Apply([](auto* b) { thread_sweep(b, {10, 14}); });
BENCHMARK(BM_TripleDistances)->Apply([](auto* b) { thread_sweep(b, {6, 8}); });
BENCHMARK(BM_CascadeStep)->Apply([](auto* b) { thread_sweep(b, {1001, 4001}); });

BENCHMARK_MAIN();
