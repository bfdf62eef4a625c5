#include "runner.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "report.hpp"
#include "spinglass/exactmodel.hpp"
#include "spinglass/gibbs.hpp"
#include "spinglass/hj.hpp"
#include "spinglass/parisi.hpp"

#ifndef SPINGLASS_VERSION
#define SPINGLASS_VERSION "unknown"
#endif
#ifndef SPINGLASS_COMPILER
#define SPINGLASS_COMPILER "unknown"
#endif
#ifndef SPINGLASS_BUILD_TYPE
#define SPINGLASS_BUILD_TYPE "unknown"
#endif

namespace spinglass::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kCommands{"enumerate", "maximize", "parisi", "hopf-lax",
                                         "characteristics", "sample", "moments", "check"};

// Stream ids keep the draws of different commands apart for one seed.
constexpr std::uint64_t kDisorderStream = 0x10;
constexpr std::uint64_t kChainStream = 0x20;

struct Outcome {
    std::map<std::string, std::string> files;  // name -> body
    bool converged = true;
    std::string note;
};

/// State shared by the command implementations.
class Context {
public:
    Context(const Config& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {}

    const Config& cfg() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    std::string seed_text() const { return std::to_string(seed_); }
    std::string hash_text() const { return hex64(hash_); }

    /// Called once every parameter has been read: rejects unknown keys and fixes the hash.
    void seal()
    {
        const auto extra = cfg_.unused();
        if (!extra.empty()) {
            std::string msg = "unknown config key";
            for (const auto& k : extra)
                msg += " " + k;
            throw ConfigError(msg);
        }
        hash_ = cfg_.hash();
    }

    std::vector<std::string> estimate(const std::string& model, std::optional<int> n, std::optional<double> beta,
                                      std::optional<double> t, std::optional<double> h1, std::optional<double> h2,
                                      const std::string& estimator, double value, std::optional<double> se,
                                      std::optional<int> n_samples) const
    {
        auto opt = [](std::optional<double> x) { return x ? format_real(*x) : std::string(); };
        return {model,
                n ? std::to_string(*n) : std::string(),
                opt(beta),
                opt(t),
                opt(h1),
                opt(h2),
                estimator,
                format_real(value),
                opt(se),
                n_samples ? std::to_string(*n_samples) : std::string(),
                seed_text(),
                hash_text()};
    }

    Json stamp(Json j) const
    {
        j["seed"] = seed_;
        j["config_hash"] = hash_text();
        return j;
    }

private:
    const Config& cfg_;
    std::uint64_t seed_;
    std::uint64_t hash_ = 0;
};

void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw ConfigError(msg);
}

Mixture read_mixture(const Config& cfg, const std::string& kind)
{
    if (kind == "sk")
        return Mixture::sk();
    const auto a = cfg.reals("model.mixture");
    try {
        return Mixture(a);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model.mixture: ") + e.what());
    }
}

std::string read_kind(const Config& cfg)
{
    const auto kind = cfg.text("model.kind", "sk");
    require(kind == "sk" || kind == "mixture" || kind == "bipartite",
            "model.kind must be sk, mixture or bipartite");
    return kind;
}

ModelSpec read_model(const Config& cfg)
{
    const auto kind = read_kind(cfg);
    const long n = cfg.integer("model.n");
    require(n >= 1 && n <= 64, "model.n must be in [1, 64]");
    if (kind == "bipartite")
        return ModelSpec::bipartite(static_cast<int>(n));
    return ModelSpec::single_type(read_mixture(cfg, kind), static_cast<int>(n));
}

int positive(const Config& cfg, const std::string& key, long fallback, long upper = 1L << 30)
{
    const long v = cfg.integer(key, fallback);
    require(v >= 1 && v <= upper, key + " must be in [1, " + std::to_string(upper) + "]");
    return static_cast<int>(v);
}

double nonnegative(const Config& cfg, const std::string& key, double fallback)
{
    const double v = cfg.real(key, fallback);
    require(v >= 0.0, key + " must be nonnegative");
    return v;
}

std::vector<double> nonnegative_list(const Config& cfg, const std::string& key)
{
    const auto v = cfg.reals(key);
    for (double x : v)
        require(x >= 0.0, key + " entries must be nonnegative");
    return v;
}

StepPath read_path(const Config& cfg, const std::string& section, const std::string& key, int m)
{
    if (cfg.has(section + "." + key)) {
        const auto v = cfg.reals(section + "." + key);
        try {
            return StepPath(v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        }
    }
    return StepPath::constant(nonnegative(cfg, section + ".h" + key.substr(4), 0.0), m);
}

Json path_json(const std::vector<std::vector<double>>& layers)
{
    Json j = Json::array();
    for (const auto& l : layers)
        j.push_back(l);
    return j;
}

// ---------------------------------------------------------------------------

Outcome cmd_enumerate(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto spec = read_model(cfg);
    const auto estimator = cfg.text("enumerate.estimator", "free_energy");
    require(estimator == "free_energy" || estimator == "enriched",
            "enumerate.estimator must be free_energy or enriched");
    const int samples = positive(cfg, "enumerate.samples", 100);
    require(samples >= 2, "enumerate.samples must be at least 2");
    std::vector<double> betas;
    double t = 0.0, h1 = 0.0, h2 = 0.0;
    if (estimator == "free_energy") {
        betas = nonnegative_list(cfg, "enumerate.beta");
    } else {
        t = nonnegative(cfg, "enumerate.t", 0.0);
        h1 = nonnegative(cfg, "enumerate.h1", 0.0);
        h2 = spec.is_bipartite() ? nonnegative(cfg, "enumerate.h2", 0.0) : 0.0;
    }
    ctx.seal();

    const RandomStream rng(ctx.seed(), kDisorderStream);
    CsvTable table(kEstimateColumns);
    if (estimator == "free_energy") {
        // Every beta sees the same disorder draws.
        for (double beta : betas) {
            const auto est = mean_free_energy(spec, beta, samples, rng);
            table.row(ctx.estimate(spec.name(), spec.n(), beta, {}, {}, {}, "free_energy", est.mean, est.std_error,
                                   est.n_samples));
        }
    } else {
        const auto est = mean_enriched_free_energy(spec, t, h1, h2, samples, rng);
        table.row(ctx.estimate(spec.name(), spec.n(), {}, t, h1, spec.is_bipartite() ? std::optional(h2) : std::nullopt,
                               "enriched_free_energy", est.mean, est.std_error, est.n_samples));
    }
    return {{{"enumerate.csv", table.str()}}, true, ""};
}

Outcome cmd_maximize(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto spec = read_model(cfg);
    const int samples = positive(cfg, "maximize.samples", 10);
    const auto methods = cfg.text("maximize.methods", "exhaustive,greedy,local_search");
    std::vector<std::pair<std::string, MaxMethod>> chosen;
    std::stringstream in(methods);
    for (std::string m; std::getline(in, m, ',');) {
        if (m == "exhaustive")
            chosen.emplace_back(m, MaxMethod::exhaustive);
        else if (m == "greedy")
            chosen.emplace_back(m, MaxMethod::greedy);
        else if (m == "local_search")
            chosen.emplace_back(m, MaxMethod::local_search);
        else
            throw ConfigError("maximize.methods: unknown method '" + m + "'");
    }
    require(!chosen.empty(), "maximize.methods is empty");
    ctx.seal();

    const RandomStream rng(ctx.seed(), kDisorderStream);
    std::vector<std::vector<double>> values(chosen.size(), std::vector<double>(static_cast<std::size_t>(samples)));
    for (int r = 0; r < samples; ++r) {
        auto stream = rng.substream(static_cast<std::uint64_t>(r));
        const auto c = sample_couplings(spec, stream);
        for (std::size_t k = 0; k < chosen.size(); ++k)
            values[k][static_cast<std::size_t>(r)] = max_energy(c, chosen[k].second).value;
    }
    CsvTable table(kEstimateColumns);
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        const auto est = summarize(values[k], spec.n(), {});
        table.row(ctx.estimate(spec.name(), spec.n(), {}, {}, {}, {}, "max_" + chosen[k].first, est.mean,
                               est.std_error, est.n_samples));
    }
    return {{{"maximize.csv", table.str()}}, true, ""};
}

Outcome cmd_parisi(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    require(cfg.has("parisi.beta"), "parisi.beta is required");
    const double beta = nonnegative(cfg, "parisi.beta", 0.0);
    const bool evaluate = cfg.has("parisi.atoms");
    CsvTable table(kEstimateColumns);
    Json j;
    j["command"] = "parisi";
    j["beta"] = beta;

    if (evaluate) {
        const auto atoms = cfg.reals("parisi.atoms");
        const auto weights = cfg.reals("parisi.weights");
        auto pde = PdeConfig::defaults(beta);
        pde.nx = positive(cfg, "parisi.nx", pde.nx);
        pde.nt = positive(cfg, "parisi.nt", pde.nt);
        pde.half_width = cfg.real("parisi.half_width", pde.half_width);
        pde.quad_order = positive(cfg, "parisi.quad_order", pde.quad_order, 128);
        ctx.seal();
        std::optional<AtomicMeasure> mu;
        try {
            mu = AtomicMeasure::canonical(atoms, weights);
            pde.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        pde.scheme = PdeScheme::recursive_quadrature;
        const double rec = parisi_functional(*mu, beta, pde);
        pde.scheme = PdeScheme::finite_difference;
        const double fd = parisi_functional(*mu, beta, pde);
        table.row(ctx.estimate("sk", {}, beta, {}, {}, {}, "parisi_recursive", rec, {}, {}));
        table.row(ctx.estimate("sk", {}, beta, {}, {}, {}, "parisi_pde_fd", fd, {}, {}));
        j["mode"] = "evaluate";
        j["atoms"] = mu->atoms();
        j["weights"] = mu->weights();
        j["value_recursive"] = rec;
        j["value_pde_fd"] = fd;
        j["solver"] = {{"half_width", pde.half_width}, {"nx", pde.nx}, {"nt", pde.nt}, {"quad_order", pde.quad_order}};
        return {{{"parisi.csv", table.str()}, {"parisi.json", ctx.stamp(j).dump(2) + "\n"}}, true, ""};
    }

    const int k = positive(cfg, "parisi.k", 1, 8);
    ParisiOptions opts;
    opts.starts = positive(cfg, "parisi.starts", opts.starts, 256);
    opts.ftol = cfg.real("parisi.ftol", opts.ftol);
    opts.max_evaluations = positive(cfg, "parisi.max_evaluations", opts.max_evaluations);
    opts.grid_dx = cfg.real("parisi.grid_dx", opts.grid_dx);
    opts.quad_order = positive(cfg, "parisi.quad_order", opts.quad_order, 128);
    require(opts.ftol > 0.0, "parisi.ftol must be positive");
    require(opts.grid_dx > 0.0 && opts.grid_dx <= 0.1, "parisi.grid_dx must be in (0, 0.1]");
    require(opts.quad_order >= 10, "parisi.quad_order must be at least 10");
    opts.seed = ctx.seed();
    ctx.seal();

    const auto best = minimize_parisi(beta, k, opts);
    table.row(ctx.estimate("sk", {}, beta, {}, {}, {}, "parisi_min_k" + std::to_string(k), best.value, {}, {}));
    j["mode"] = "minimize";
    j["k"] = k;
    j["value"] = best.value;
    j["converged"] = best.converged;
    j["atoms"] = best.measure.atoms();
    j["weights"] = best.measure.weights();
    Json starts = Json::array();
    for (const auto& s : best.starts)
        starts.push_back({{"index", s.index},
                          {"initial", s.initial},
                          {"value", s.value},
                          {"evaluations", s.evaluations},
                          {"converged", s.converged},
                          {"atoms", s.atoms},
                          {"weights", s.weights}});
    j["starts"] = starts;
    j["solver"] = {{"method", "nelder_mead"},
                   {"starts", opts.starts},
                   {"ftol", opts.ftol},
                   {"max_evaluations", opts.max_evaluations},
                   {"grid_dx", opts.grid_dx},
                   {"quad_order", opts.quad_order}};
    return {{{"parisi.csv", table.str()}, {"parisi.json", ctx.stamp(j).dump(2) + "\n"}},
            best.converged,
            best.converged ? "" : "parisi minimization did not converge"};
}

Outcome cmd_hopf_lax(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto kind = read_kind(cfg);
    require(kind != "bipartite", "hopf-lax needs a single-type model (sk or mixture)");
    const auto xi = read_mixture(cfg, kind);
    const auto times = nonnegative_list(cfg, "hopf-lax.t");
    const int m = positive(cfg, "hopf-lax.m", 16, 256);
    const auto q = read_path(cfg, "hopf-lax", "path", m);
    HopfLaxOptions opts;
    opts.starts = positive(cfg, "hopf-lax.starts", opts.starts, 64);
    opts.ftol = cfg.real("hopf-lax.ftol", opts.ftol);
    opts.max_evaluations = positive(cfg, "hopf-lax.max_evaluations", opts.max_evaluations);
    opts.grid.dx = cfg.real("hopf-lax.grid_dx", opts.grid.dx);
    require(opts.ftol > 0.0, "hopf-lax.ftol must be positive");
    require(opts.grid.dx > 0.0 && opts.grid.dx <= 0.1, "hopf-lax.grid_dx must be in (0, 0.1]");
    opts.seed = ctx.seed();
    ctx.seal();

    const bool constant = q.values().front() == q.values().back();
    auto level = [&]() -> std::optional<double> {
        if (constant)
            return q[0];
        return std::nullopt;
    };
    CsvTable table(kEstimateColumns);
    Json runs = Json::array();
    bool converged = true;
    for (double t : times) {
        const auto r = hopf_lax(t, q, xi, opts);
        converged = converged && r.converged;
        const double beta = std::sqrt(2.0 * t);
        const double parisi = hopf_lax_to_parisi(r.value, t, xi);
        table.row(ctx.estimate("hj", q.m(), {}, t, level(), {}, "hopf_lax", r.value, {}, {}));
        if (q.values().back() == 0.0)
            table.row(ctx.estimate("hj", q.m(), beta, t, level(), {}, "hopf_lax_parisi", parisi, {}, {}));
        runs.push_back({{"t", t},
                        {"value", r.value},
                        {"parisi_convention", parisi},
                        {"beta", beta},
                        {"increment", r.increment},
                        {"converged", r.converged},
                        {"evaluations", r.evaluations}});
    }
    Json j;
    j["command"] = "hopf-lax";
    j["mixture"] = std::vector<double>(xi.coefficients().begin(), xi.coefficients().end());
    j["path"] = q.values();
    j["runs"] = runs;
    return {{{"hopf-lax.csv", table.str()}, {"hopf-lax.json", ctx.stamp(j).dump(2) + "\n"}},
            converged,
            converged ? "" : "hopf-lax optimizer did not converge"};
}

Outcome cmd_characteristics(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto kind = read_kind(cfg);
    const bool bipartite = kind == "bipartite";
    const Mixture xi = bipartite ? Mixture::sk() : read_mixture(cfg, kind);
    const auto times = cfg.reals("characteristics.t");
    for (double t : times)
        require(t > 0.0, "characteristics.t entries must be positive");
    const int m = positive(cfg, "characteristics.m", 4, 64);
    std::optional<StepPath> q1, q2;
    q1 = read_path(cfg, "characteristics", "path1", m);
    if (bipartite)
        q2 = read_path(cfg, "characteristics", "path2", m);
    CharacteristicSearch search;
    search.random_starts = static_cast<int>(cfg.integer("characteristics.random_starts", search.random_starts));
    require(search.random_starts >= 0, "characteristics.random_starts must be nonnegative");
    search.max_iterations = positive(cfg, "characteristics.max_iterations", search.max_iterations);
    search.grid.dx = cfg.real("characteristics.grid_dx", search.grid.dx);
    require(search.grid.dx > 0.0 && search.grid.dx <= 0.1, "characteristics.grid_dx must be in (0, 0.1]");
    search.seed = ctx.seed();
    ctx.seal();
    if (bipartite && q1->m() != q2->m())
        throw ConfigError("characteristics.path1 and path2 need equal lengths");

    CsvTable table({"t", "grid_m", "n_predictions", "value_min", "value_max", "source_hash", "seed", "config_hash"});
    Json scans = Json::array();
    bool all_found = true;
    for (double t : times) {
        const auto set = bipartite ? characteristics_through(t, PathPair(*q1, *q2), search)
                                   : characteristics_through(t, *q1, xi, search);
        std::uint64_t h = 0xcbf29ce484222325ull;
        Json preds = Json::array();
        for (const auto& p : set.predictions) {
            for (const auto& layer : p.source)
                h = fnv1a(format_reals(layer) + ";", h);
            preds.push_back({{"predicted_value", p.predicted_value},
                             {"feasible", p.feasible},
                             {"line_residual", p.line_residual},
                             {"source", path_json(p.source)},
                             {"target", path_json(p.target)},
                             {"gradient", path_json(p.gradient)}});
        }
        const auto n = set.predictions.size();
        all_found = all_found && n > 0;
        table.row({format_real(t), std::to_string(q1->m()), std::to_string(n),
                   n ? format_real(set.predictions.front().predicted_value) : "",
                   n ? format_real(set.predictions.back().predicted_value) : "", hex64(h), ctx.seed_text(),
                   ctx.hash_text()});
        scans.push_back({{"t", t},
                         {"n_predictions", n},
                         {"predictions", preds},
                         {"selected", nullptr},
                         {"diagnostic", set.diagnostic}});
    }
    Json j;
    j["command"] = "characteristics";
    j["model"] = bipartite ? "bipartite" : "single_type";
    j["target"] = bipartite ? path_json({q1->values(), q2->values()}) : path_json({q1->values()});
    j["note"] = "all characteristics found are listed; none is selected";
    j["scans"] = scans;
    return {{{"characteristics.csv", table.str()}, {"characteristics.json", ctx.stamp(j).dump(2) + "\n"}},
            all_found,
            all_found ? "" : "no characteristic found for some t"};
}

Outcome cmd_sample(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto spec = read_model(cfg);
    const double beta = nonnegative(cfg, "sample.beta", 1.0);
    const auto mode = cfg.text("sample.mode", "mcmc");
    require(mode == "mcmc" || mode == "exact", "sample.mode must be mcmc or exact");
    const double epsilon = cfg.real("sample.epsilon", 0.5);
    require(epsilon > 0.0, "sample.epsilon must be positive");
    McmcOptions opts;
    if (mode == "mcmc") {
        opts.sweeps = cfg.integer("sample.sweeps", opts.sweeps);
        require(opts.sweeps >= 1, "sample.sweeps must be positive");
        opts.n_replicas = positive(cfg, "sample.replicas", 3, 3);
        require(opts.n_replicas >= 2, "sample.replicas must be 2 or 3");
        opts.thin = positive(cfg, "sample.thin", opts.thin);
        opts.burn_in_fraction = cfg.real("sample.burn_in", opts.burn_in_fraction);
        require(opts.burn_in_fraction >= 0.0 && opts.burn_in_fraction < 1.0, "sample.burn_in must be in [0, 1)");
        opts.tempering = cfg.flag("sample.tempering", beta >= 1.0);
        opts.rungs = positive(cfg, "sample.rungs", opts.rungs, 64);
        require(opts.rungs >= 2, "sample.rungs must be at least 2");
    }
    ctx.seal();
    if (mode == "exact")
        require(spec.config_length() <= kOverlapExactCap, "exact sampling needs config length <= 13");

    RandomStream disorder(ctx.seed(), kDisorderStream);
    const auto c = sample_couplings(spec, disorder);
    OverlapStats overlap;
    std::optional<TripleDefectStats> defects;
    Json j;
    j["command"] = "sample";
    j["mode"] = mode;
    if (mode == "exact") {
        overlap = overlap_distribution_exact(c, beta);
        if (spec.config_length() <= kTripleExactCap)
            defects = ultrametric_defects_exact(c, beta, epsilon);
    } else {
        const auto samples = mcmc_chain(c, beta, opts, RandomStream(ctx.seed(), kChainStream));
        overlap = overlap_from_samples(samples);
        if (opts.n_replicas == 3)
            defects = defects_from_samples(samples, epsilon);
        j["recorded_samples"] = samples.n_samples();
        j["acceptance_rate"] = samples.acceptance_rate;
        j["swap_rate"] = samples.swap_rate;
    }
    CsvTable hist({"bin_lo", "bin_hi", "mass", "seed", "config_hash"});
    for (std::size_t b = 0; b < overlap.mass.size(); ++b)
        hist.row({format_real(overlap.edges[b]), format_real(overlap.edges[b + 1]), format_real(overlap.mass[b]),
                  ctx.seed_text(), ctx.hash_text()});
    std::map<std::string, std::string> files{{"overlap.csv", hist.str()}};
    if (defects) {
        CsvTable d({"epsilon", "violation_fraction", "q50", "q90", "q99", "seed", "config_hash"});
        d.row({format_real(defects->epsilon), format_real(defects->violation_fraction),
               format_real(defects->quantiles[0].second), format_real(defects->quantiles[1].second),
               format_real(defects->quantiles[2].second), ctx.seed_text(), ctx.hash_text()});
        files["defects.csv"] = d.str();
        j["violation_std_error"] = defects->violation_std_error;
    }
    j["beta"] = beta;
    j["first_moment"] = overlap.first_moment;
    j["second_moment"] = overlap.second_moment;
    j["first_std_error"] = overlap.first_std_error;
    j["second_std_error"] = overlap.second_std_error;
    files["sample.json"] = ctx.stamp(j).dump(2) + "\n";
    return {files, true, ""};
}

Outcome cmd_moments(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto spec = read_model(cfg);
    const auto betas = nonnegative_list(cfg, "moments.beta");
    const int n = positive(cfg, "moments.replicas", 1, 8);
    ctx.seal();
    if (static_cast<long>(n) * spec.config_length() > kReplicaCap)
        throw ConfigError("moments: replicas * config length exceeds " + std::to_string(kReplicaCap));
    CsvTable table(kEstimateColumns);
    for (double beta : betas)
        table.row(ctx.estimate(spec.name(), spec.n(), beta, {}, {}, {}, "log_moment_n" + std::to_string(n),
                               replica_moment_exact(spec, beta, n), {}, {}));
    return {{{"moments.csv", table.str()}}, true, ""};
}

Outcome cmd_check(Context& ctx)
{
    const auto& cfg = ctx.cfg();
    const auto spec = read_model(cfg);
    const auto mode = cfg.text("check.mode", "derivatives");
    require(mode == "derivatives" || mode == "hj_residual", "check.mode must be derivatives or hj_residual");
    const double t = nonnegative(cfg, "check.t", 0.1);
    CsvTable table(kEstimateColumns);
    if (mode == "derivatives") {
        const double h = nonnegative(cfg, "check.h", 0.2);
        const int order = positive(cfg, "check.quad_order", 40, 128);
        require(order >= 5, "check.quad_order must be at least 5");
        ctx.seal();
        DerivativeCheck r;
        try {
            r = derivative_identity_check(spec, t, h, order);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        const std::optional<double> h2 = spec.is_bipartite() ? std::optional(h) : std::nullopt;
        auto row = [&](const std::string& name, double v) {
            table.row(ctx.estimate(spec.name(), spec.n(), {}, t, h, h2, name, v, {}, {}));
        };
        row("residual_t", r.residual_t);
        row("residual_h", r.residual_h);
        row("d_t", r.d_t);
        row("d_h", r.d_h);
        row("gibbs_t", r.gibbs_t);
        row("gibbs_h", r.gibbs_h);
        if (!spec.is_bipartite())
            row("overlap_variance", r.variance);
        row("free_energy", r.free_energy);
        return {{{"check.csv", table.str()}}, true, ""};
    }

    const double h1 = nonnegative(cfg, "check.h1", 0.1);
    const double h2 = spec.is_bipartite() ? nonnegative(cfg, "check.h2", 0.1) : 0.0;
    const double dt = cfg.real("check.dt", 0.01);
    const double dh = cfg.real("check.dh", 0.01);
    const int samples = positive(cfg, "check.samples", 100);
    require(samples >= 2, "check.samples must be at least 2");
    require(dt > 0.0 && dt <= 0.1 && dh > 0.0 && dh <= 0.1, "check.dt and check.dh must be in (0, 0.1]");
    require(t >= dt && h1 >= dh && (!spec.is_bipartite() || h2 >= dh), "stencil leaves the domain t, h >= 0");
    ctx.seal();

    // Common random numbers: every stencil point reuses the same couplings and fields.
    const RandomStream rng(ctx.seed(), kDisorderStream);
    auto f = [&](double tt, double a, double b) {
        return mean_enriched_free_energy(spec, tt, a, b, samples, rng).mean;
    };
    ConstantPathStencil s;
    s.dt = dt;
    s.dh = dh;
    s.f_t_plus = f(t + dt, h1, h2);
    s.f_t_minus = f(t - dt, h1, h2);
    s.f_h_plus = f(t, h1 + dh, h2);
    s.f_h_minus = f(t, h1 - dh, h2);
    if (spec.is_bipartite()) {
        s.f_h2_plus = f(t, h1, h2 + dh);
        s.f_h2_minus = f(t, h1, h2 - dh);
    }
    const auto model = spec.is_bipartite() ? HjModel::product() : HjModel::single(spec.mixture());
    const double residual = hj_residual(s, model);
    table.row(ctx.estimate(spec.name(), spec.n(), {}, t, h1, spec.is_bipartite() ? std::optional(h2) : std::nullopt,
                           "hj_residual", residual, {}, samples));
    return {{{"check.csv", table.str()}}, true, ""};
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string valid_commands()
{
    std::string s;
    for (const auto& c : kCommands)
        s += (s.empty() ? "" : ", ") + c;
    return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Spin-glass numerical laboratory", "spinglass"};
    std::string command;
    std::string config_path;
    std::string out_dir = ".";
    int threads = -1;
    app.add_option("command", command, "one of: " + valid_commands())->required();
    app.add_option("--config", config_path, "experiment configuration file")->required();
    app.add_option("--threads", threads, "worker threads (default: SPINGLASS_THREADS, then all cores)");
    app.add_option("--out", out_dir, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "spinglass: " << e.what() << "\n";
        if (command.empty() || std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
            err << "valid commands: " << valid_commands() << "\n";
        return kExitValidation;
    }
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
        err << "spinglass: unknown command '" << command << "'; valid commands: " << valid_commands() << "\n";
        return kExitValidation;
    }

    if (threads == -1) {
        threads = 0;
        if (const char* env = std::getenv("SPINGLASS_THREADS"); env != nullptr && *env != '\0') {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (*end != '\0' || v < 1 || v > 4096) {
                err << "spinglass: SPINGLASS_THREADS must be a positive integer\n";
                return kExitValidation;
            }
            threads = static_cast<int>(v);
        }
    } else if (threads < 1 || threads > 4096) {
        err << "spinglass: --threads must be a positive integer\n";
        return kExitValidation;
    }
    if (threads > 0)
        omp_set_num_threads(threads);

    Outcome outcome;
    std::optional<Config> cfg;
    std::optional<Context> ctx;
    try {
        cfg = Config::load(config_path);
        const auto seed = cfg->seed();
        ctx.emplace(*cfg, seed);
        static const std::map<std::string, std::function<Outcome(Context&)>> table{
            {"enumerate", cmd_enumerate}, {"maximize", cmd_maximize},
            {"parisi", cmd_parisi},       {"hopf-lax", cmd_hopf_lax},
            {"characteristics", cmd_characteristics},
            {"sample", cmd_sample},       {"moments", cmd_moments},
            {"check", cmd_check}};
        outcome = table.at(command)(*ctx);
    } catch (const ConfigError& e) {
        err << "spinglass: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        err << "spinglass: invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::length_error& e) {
        err << "spinglass: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "spinglass: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }

    try {
        const fs::path dir(out_dir);
        fs::create_directories(dir);
        Json manifest;
        manifest["command"] = command;
        manifest["seed"] = ctx->seed();
        manifest["config_hash"] = ctx->hash_text();
        manifest["config"] = cfg->resolved();
        manifest["build"] = {{"version", SPINGLASS_VERSION},
                             {"compiler", SPINGLASS_COMPILER},
                             {"build_type", SPINGLASS_BUILD_TYPE}};
        manifest["threads"] = omp_get_max_threads();
        manifest["timestamp"] = utc_timestamp();
        manifest["status"] = outcome.converged ? "ok" : "not_converged";
        Json files = Json::array();
        for (const auto& [name, body] : outcome.files) {
            write_text(dir / name, body);
            files.push_back(name);
        }
        manifest["outputs"] = files;
        write_json(dir / "manifest.json", manifest);
        for (const auto& [name, body] : outcome.files)
            out << (dir / name).string() << "\n";
    } catch (const std::exception& e) {
        err << "spinglass: " << e.what() << "\n";
        return kExitValidation;
    }
    if (!outcome.converged) {
        err << "spinglass: " << outcome.note << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace spinglass::cli
