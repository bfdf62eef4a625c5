// Acceptance driver: one PASS/FAIL line per criterion.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "runner.hpp"
#include "spinglass/exactmodel.hpp"
#include "spinglass/gibbs.hpp"
#include "spinglass/hj.hpp"
#include "spinglass/parisi.hpp"

using namespace spinglass;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const double kRs03 = oracle::kLog2 + 0.045;

Verdict beta_zero()
{
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
        RandomStream rng(100 + static_cast<std::uint64_t>(n));
        for (const auto& spec : {ModelSpec::sk(n), ModelSpec::single_type(Mixture({0.0, 1.0, 0.5}), std::min(n, 8)),
                                 ModelSpec::bipartite(n)}) {
            const double expected = spec.is_bipartite() ? 2.0 * oracle::kLog2 : oracle::kLog2;
            const auto est = mean_free_energy(spec, 0.0, 2, rng);
            worst = std::max(worst, std::abs(est.mean - expected) / expected);
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 4.0 * 2.220446049250313e-16 && elapsed < 1.0,
            fmt("max relative error %.2e, runtime %.3f s", worst, elapsed)};
}

Verdict high_temperature_sk()
{
    const auto t0 = Clock::now();
    const auto est = mean_free_energy(ModelSpec::sk(16), 0.3, 200, RandomStream(2));
    const double elapsed = seconds_since(t0);
    const double gap = std::abs(est.mean - kRs03);
    return {gap <= 0.01 && elapsed < 120.0,
            fmt("mean %.6f (se %.1e) vs %.6f, gap %.2e, runtime %.1f s", est.mean, est.std_error, kRs03, gap, elapsed)};
}

Verdict closed_forms()
{
    const double beta = 0.3;
    const auto d0 = AtomicMeasure::dirac(0.0);
    auto fd_cfg = PdeConfig::defaults(beta);
    fd_cfg.scheme = PdeScheme::finite_difference;
    const double rec = parisi_functional(d0, beta);
    const double fd = parisi_functional(d0, beta, fd_cfg);
    const double oracle_d1 =
        oracle::kLog2 + oracle::gauss([](double x) { return oracle::log_cosh(x); }, beta * std::sqrt(2.0));
    const double d1 = parisi_functional(AtomicMeasure::dirac(1.0), beta);
    const bool pass = std::abs(rec - kRs03) <= 1e-6 && std::abs(fd - kRs03) <= 1e-4 && std::abs(d1 - oracle_d1) <= 1e-6;
    return {pass, fmt("P(d0) recursive %.10f fd %.10f exact %.10f (rounded 0.73815); P(d1) %.10f oracle %.10f", rec,
                      fd, kRs03, d1, oracle_d1)};
}

AtomicMeasure random_measure(RandomStream& rng, int max_atoms)
{
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_atoms)));
    std::vector<double> atoms, weights;
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        atoms.push_back(rng.uniform());
        weights.push_back(0.05 + rng.uniform());
        total += weights.back();
    }
    for (auto& w : weights)
        w /= total;
    return AtomicMeasure::canonical(atoms, weights);
}

Verdict solver_agreement()
{
    RandomStream rng(4);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const auto mu = random_measure(rng, 4);
        const double beta = 1.5 * rng.uniform();
        const double gap =
            std::abs(parisi_pde_fd(mu, beta, PdeConfig::defaults(beta)) - phi_recursive(mu, beta));
        worst = std::max(worst, gap);
    }
    return {worst <= 1e-3, fmt("max |fd - recursive| over 20 instances %.2e", worst)};
}

Verdict rsb_monotonicity()
{
    bool pass = true;
    std::string detail;
    for (double beta : {0.3, 1.0}) {
        ParisiOptions opts;
        std::vector<double> values;
        for (int k = 1; k <= 3; ++k) {
            const auto r = minimize_parisi(beta, k, opts);
            values.push_back(r.value);
            opts.warm_atoms = r.measure.atoms();
            opts.warm_weights = r.measure.weights();
        }
        pass = pass && values[1] <= values[0] + 1e-5 && values[2] <= values[1] + 1e-5;
        if (beta == 0.3)
            pass = pass && std::abs(values[0] - values[1]) <= 1e-4 && std::abs(values[0] - values[2]) <= 1e-4 &&
                   std::abs(values[1] - values[2]) <= 1e-4;
        detail += fmt("beta %.1f: k=1 %.8f k=2 %.8f k=3 %.8f; ", beta, values[0], values[1], values[2]);
    }
    return {pass, detail};
}

Verdict guerra_bound()
{
    const auto t0 = Clock::now();
    bool pass = true;
    double margin = 1e300;
    for (double beta : {0.3, 1.0}) {
        const auto est = mean_free_energy(ModelSpec::sk(14), beta, 100, RandomStream(6));
        RandomStream rng(60);
        for (int i = 0; i < 50; ++i) {
            const double p = parisi_functional(random_measure(rng, 3), beta);
            const double slack = p + 3.0 * est.std_error + 0.05 - est.mean;
            margin = std::min(margin, slack);
            pass = pass && slack >= 0.0;
        }
    }
    const double elapsed = seconds_since(t0);
    return {pass && elapsed < 600.0, fmt("smallest slack %.4f over 100 (measure, beta) pairs, runtime %.1f s", margin,
                                         elapsed)};
}

Verdict derivative_identities()
{
    bool pass = true;
    std::string detail;
    for (const auto& spec : {ModelSpec::sk(2), ModelSpec::bipartite(1)}) {
        const auto a = derivative_identity_check(spec, 0.1, 0.2, 40);
        const auto b = derivative_identity_check(spec, 0.1, 0.2, 60);
        const double drift = std::max(std::abs(a.d_t - b.d_t), std::abs(a.d_h - b.d_h));
        pass = pass && a.residual_t <= 1e-6 && a.residual_h <= 1e-6 && b.residual_t <= 1e-6 &&
               b.residual_h <= 1e-6 && drift <= 1e-6;
        detail += fmt("%s: residuals %.1e/%.1e (order 40), %.1e/%.1e (order 60), drift %.1e; ", spec.name().c_str(),
                      a.residual_t, a.residual_h, b.residual_t, b.residual_h, drift);
    }
    return {pass, detail};
}

Verdict replica_moments()
{
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n)
        for (const auto& spec : {ModelSpec::sk(n), ModelSpec::single_type(Mixture({0.5, 1.0, 0.25}), n),
                                 ModelSpec::bipartite(n)})
            for (double beta : {0.3, 1.0, 2.0}) {
                const double logs = spec.is_bipartite() ? 2.0 * oracle::kLog2 : oracle::kLog2;
                const double xi1 = spec.is_bipartite() ? 1.0 : spec.mixture()(1.0);
                const double expected = logs + beta * beta * xi1 / 2.0;
                worst = std::max(worst, std::abs(replica_moment_exact(spec, beta, 1) - expected) / expected);
            }

    const int n = 4;
    const double beta = 0.5;
    const auto spec = ModelSpec::sk(n);
    const RandomStream root(8);
    const int draws = 100000;
    double sum = 0.0, sq = 0.0;
    for (int d = 0; d < draws; ++d) {
        auto rng = root.substream(static_cast<std::uint64_t>(d));
        const double z = std::exp(n * free_energy_sample(sample_couplings(spec, rng), beta));
        sum += z * z;
        sq += z * z * z * z;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sq / draws - mean * mean) / (draws - 1));
    const double exact = std::exp(n * replica_moment_exact(spec, beta, 2));
    const double z_score = std::abs(mean - exact) / se;
    return {worst <= 1e-10 && z_score <= 4.0,
            fmt("n=1 max relative error %.2e; n=2 exact %.6f vs MC %.6f (se %.4f, %.2f se)", worst, exact, mean, se,
                z_score)};
}

Verdict mcmc_fidelity()
{
    RandomStream disorder(9);
    const auto c = sample_couplings(ModelSpec::sk(8), disorder);
    McmcOptions o;
    o.sweeps = 1000000;
    o.n_replicas = 3;
    o.tempering = true;
    const auto samples = mcmc_chain(c, 1.0, o, RandomStream(90));
    const auto tv = total_variation(overlap_from_samples(samples), overlap_distribution_exact(c, 1.0));
    const auto dm = defects_from_samples(samples, 0.5);
    const auto de = ultrametric_defects_exact(c, 1.0, 0.5);
    const double gap = std::abs(dm.violation_fraction - de.violation_fraction);
    return {tv <= 0.05 && gap <= 3.0 * dm.violation_std_error,
            fmt("TV %.4f; violation mcmc %.5f exact %.5f (se %.5f)", tv, dm.violation_fraction, de.violation_fraction,
                dm.violation_std_error)};
}

Verdict parisi_bridge()
{
    const auto t0 = Clock::now();
    const double t = 0.045;
    const auto hl = hopf_lax(t, StepPath::constant(0.0, 32), Mixture::sk());
    const double converted = hopf_lax_to_parisi(hl.value, t, Mixture::sk());
    ParisiOptions opts;
    const double parisi = minimize_parisi(0.3, 2, opts).value;
    const double gap = std::abs(converted - parisi);
    return {gap <= 5e-3 && hl.converged, fmt("converted Hopf-Lax %.10f, Parisi minimum %.10f, gap %.2e, runtime %.1f s",
                                             converted, parisi, gap, seconds_since(t0))};
}

Verdict short_time_characteristics()
{
    const auto t0 = Clock::now();
    RandomStream rng(11);
    const double t = 0.01;
    HopfLaxOptions opts;
    opts.starts = 2;
    opts.grid.dx = 0.04;
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> v(6);
        for (auto& x : v)
            x = 0.8 * rng.uniform();
        std::sort(v.begin(), v.end());
        const StepPath q(v);
        const auto pr = characteristic_predict(q, t, Mixture::sk(), opts.grid);
        const auto hl = hopf_lax(t, StepPath(pr.target[0]), Mixture::sk(), opts);
        worst = std::max(worst, std::abs(pr.predicted_value - hl.value));
    }
    return {worst <= 1e-3, fmt("max |prediction - hopf_lax| over 10 paths %.2e, runtime %.1f s", worst,
                               seconds_since(t0))};
}

Verdict bipartite_lower_bound()
{
    const auto t0 = Clock::now();
    const double t = 0.1;
    const PathPair target(StepPath::constant(0.1, 4), StepPath::constant(0.1, 4));
    const auto set = characteristics_through(t, target);
    if (set.predictions.size() != 1)
        return {false, fmt("expected one characteristic, found %zu", set.predictions.size())};
    const double prediction = set.predictions[0].predicted_value;
    const auto est = mean_enriched_free_energy(ModelSpec::bipartite(10), t, 0.1, 0.1, 100, RandomStream(12));
    const double slack = est.mean - (prediction - 3.0 * est.std_error - 0.05);
    return {slack >= 0.0, fmt("enumeration %.6f (se %.1e) vs prediction %.6f, slack %.4f, runtime %.1f s", est.mean,
                              est.std_error, prediction, slack, seconds_since(t0))};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

int invoke(const std::vector<std::string>& args)
{
    std::vector<const char*> argv{"spinglass"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("spinglass_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Verdict bipartite_multiplicity()
{
    const auto t0 = Clock::now();
    const auto dir = scratch("multiplicity");
    std::ofstream(dir / "scan.ini") << "seed = 13\n[model]\nkind = bipartite\n"
                                       "[characteristics]\nt = 0.4, 0.5, 0.6, 0.7, 0.8\nm = 4\nh1 = 0\nh2 = 0\n";
    const int code = invoke({"characteristics", "--config", (dir / "scan.ini").string(), "--out", dir.string()});
    if (code != 0)
        return {false, fmt("characteristics command exited with %d", code)};
    const auto report = nlohmann::json::parse(slurp(dir / "characteristics.json"));
    for (const auto& scan : report["scans"]) {
        const auto& preds = scan["predictions"];
        double lo = 1e300, hi = -1e300, residual = 0.0;
        for (const auto& p : preds) {
            lo = std::min(lo, p["predicted_value"].get<double>());
            hi = std::max(hi, p["predicted_value"].get<double>());
            residual = std::max(residual, p["line_residual"].get<double>());
        }
        if (preds.size() >= 2 && hi - lo > 1e-6) {
            const bool pass = residual <= 1e-8 && scan["selected"].is_null();
            return {pass, fmt("t = %.2f: %zu predictions, values %.10f .. %.10f, max line residual %.1e, none "
                              "selected, runtime %.1f s",
                              scan["t"].get<double>(), preds.size(), lo, hi, residual, seconds_since(t0))};
        }
    }
    return {false, "no multiplicity found for t in [0.4, 0.8]"};
}

Verdict determinism()
{
    const auto dir = scratch("determinism");
    const std::vector<std::pair<std::string, std::string>> runs{
        {"enumerate", "seed = 21\n[model]\nkind = bipartite\nn = 6\n[enumerate]\nbeta = 0.5, 1.5\nsamples = 20\n"},
        {"sample", "seed = 22\n[model]\nn = 7\n[sample]\nbeta = 1.2\nsweeps = 20000\n"},
        {"parisi", "seed = 23\n[parisi]\nbeta = 1.0\nk = 2\nstarts = 3\n"},
        {"moments", "seed = 24\n[model]\nkind = mixture\nmixture = 0, 1, 0.5\nn = 4\n[moments]\nbeta = 0.7\n"
                    "replicas = 3\n"}};
    int compared = 0;
    for (const auto& [command, body] : runs) {
        const auto cfg = dir / (command + ".ini");
        std::ofstream(cfg) << body;
        std::vector<std::string> outputs;
        for (const char* threads : {"1", "1", "8", "8"}) {
            const auto out = dir / (command + std::to_string(outputs.size()));
            if (invoke({command, "--config", cfg.string(), "--threads", threads, "--out", out.string()}) != 0)
                return {false, command + " failed"};
            std::string all;
            for (const auto& entry : fs::directory_iterator(out))
                if (entry.path().filename() != "manifest.json")
                    all += entry.path().filename().string() + "\n" + slurp(entry.path());
            outputs.push_back(all);
        }
        for (const auto& o : outputs)
            if (o != outputs[0])
                return {false, command + " reports differ"};
        ++compared;
    }
    omp_set_num_threads(1);
    return {true, fmt("%d commands byte-identical over threads 1, 1, 8, 8", compared)};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"beta = 0 exactness", beta_zero},
        {"high-temperature SK", high_temperature_sk},
        {"Parisi closed forms", closed_forms},
        {"solver cross-agreement", solver_agreement},
        {"k-RSB monotonicity", rsb_monotonicity},
        {"Guerra bound", guerra_bound},
        {"derivative identities", derivative_identities},
        {"replica moments", replica_moments},
        {"MCMC fidelity", mcmc_fidelity},
        {"Parisi and Hopf-Lax agree", parisi_bridge},
        {"short-time characteristics", short_time_characteristics},
        {"bipartite lower bound", bipartite_lower_bound},
        {"bipartite multiplicity", bipartite_multiplicity},
        {"determinism", determinism}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += v.pass ? 0 : 1;
        std::printf("AC%zu %s %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
