// coulomb: command-line front end.
//
//   coulomb theory   --beta 1 --gamma 1 --n 100 --lags 3
//   coulomb invert   --c 2 --b 0.5 --n 8
//   coulomb minimize --beta 1 --gamma 1 --n 200 --ensemble chain
//   coulomb sample   --n 64 --ensemble ring --constrained true --sweeps 100000
//   coulomb verify   fast
//
// Options may also come from a flat key=value file given with --config;
// flags on the command line take precedence. Results go to --out, or to
// $COULOMB_OUT_DIR/<command>.<format> (default directory ".").

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "coulomb/acceptance.hpp"
#include "coulomb/circulant.hpp"
#include "coulomb/io.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/sampler.hpp"
#include "coulomb/theory.hpp"

#ifndef COULOMB_VERSION
#define COULOMB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace coulomb;
using nlohmann::ordered_json;

namespace {

struct Options {
    double beta = 1.0;
    double gamma = 1.0;
    int n = 64;
    std::optional<double> lambda;
    std::optional<std::uint64_t> seed;  ///< verify defaults to the suite's fixed seed, others to 1
    long long sweeps = 100000;
    long long burnin = 1000;
    int thin = 1;
    int chains = 1;
    double step = 0.0;
    std::string ensemble = "ring";
    bool constrained = true;
    std::string out;
    std::string format = "csv";
    int lags = 5;
    int batches = 20;
    double nonlocal = 0.5;
    int threads = 0;
    std::string dump;
    double c = 2.0;
    double b = 0.5;
    std::string suite = "fast";
    bool quiet = false;
};

std::uint64_t seed_of(const Options& o, std::uint64_t fallback = 1) { return o.seed.value_or(fallback); }

ModelParams params_of(const Options& o) {
    ModelParams p{o.beta, o.gamma, o.n};
    p.validate();
    return p;
}

Topology topology_of(const Options& o) {
    return o.ensemble == "chain" ? Topology::chain : Topology::ring;
}

fs::path output_path(const Options& o, const std::string& command) {
    if (!o.out.empty()) return o.out;
    const char* dir = std::getenv("COULOMB_OUT_DIR");
    return fs::path(dir && *dir ? dir : ".") / (command + "." + o.format);
}

ordered_json config_echo(const Options& o, const std::string& command) {
    ordered_json cfg;
    cfg["beta"] = o.beta;
    cfg["gamma"] = o.gamma;
    cfg["n"] = o.n;
    if (o.lambda) cfg["lambda"] = *o.lambda;
    else cfg["lambda"] = nullptr;
    cfg["seed"] = seed_of(o, command == "verify" ? acceptance::kDefaultSeed : 1);
    cfg["ensemble"] = o.ensemble;
    cfg["constrained"] = o.constrained;
    cfg["format"] = o.format;
    if (command == "theory") cfg["lags"] = o.lags;
    if (command == "invert") {
        cfg["c"] = o.c;
        cfg["b"] = o.b;
    }
    if (command == "sample") {
        cfg["sweeps"] = o.sweeps;
        cfg["burnin"] = o.burnin;
        cfg["thin"] = o.thin;
        cfg["chains"] = o.chains;
        cfg["step"] = o.step;
        cfg["lags"] = o.lags;
        cfg["batches"] = o.batches;
        cfg["nonlocal"] = o.nonlocal;
        cfg["dump"] = o.dump;
    }
    if (command == "verify") cfg["suite"] = o.suite;
    return cfg;
}

// Writes the named tables (CSV: first table at `out`, the rest as siblings;
// JSON: one object keyed by table name) and the manifest.
void emit(const Options& o, const std::string& command,
          const std::vector<std::pair<std::string, io::Table>>& tables,
          const ordered_json& extra = {}) {
    const fs::path out = output_path(o, command);
    std::vector<std::string> files;
    if (o.format == "json") {
        ordered_json doc;
        for (const auto& [name, t] : tables) doc[name] = io::to_json(t);
        io::write_text(out, doc.dump(2) + "\n");
        files.push_back(out.string());
    } else {
        for (std::size_t i = 0; i < tables.size(); ++i) {
            const fs::path p = i == 0 ? out : io::sibling(out, tables[i].first, ".csv");
            std::ostringstream ss;
            io::write_csv(tables[i].second, ss);
            io::write_text(p, ss.str());
            files.push_back(p.string());
        }
    }
    if (!o.dump.empty() && command == "sample") files.push_back(o.dump);

    ordered_json m;
    m["artifact"] = "coulomb";
    m["version"] = COULOMB_VERSION;
    m["command"] = command;
    m["seed"] = seed_of(o, command == "verify" ? acceptance::kDefaultSeed : 1);
    m["config"] = config_echo(o, command);
    m["outputs"] = files;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    io::write_text(io::manifest_path(out), m.dump(2) + "\n");
    if (!o.quiet) {
        for (const auto& f : files) std::cerr << "wrote " << f << "\n";
    }
}

void print_table(const Options& o, const io::Table& t) {
    if (!o.quiet) io::write_csv(t, std::cout);
}

int cmd_theory(const Options& o) {
    const ModelParams p = params_of(o);
    if (o.lags < 0 || 2 * o.lags > p.n) throw DomainError("lags must lie in [0, n/2]");
    const double d = delta(p);
    const double e = eta(p);
    io::Table t{{"lag", "delta", "eta", "variance_amplitude", "lambda_unbiased", "cov_unconditional",
                 "cov_conditional", "corr_unconditional", "corr_conditional"},
                {}};
    for (int lag = 0; lag <= o.lags; ++lag)
        t.add({static_cast<long long>(lag), d, e, variance_amplitude(p), lambda_unbiased(p),
               predicted_cov(p, lag, false), predicted_cov(p, lag, true),
               predicted_corr(p, lag, false), predicted_corr(p, lag, true)});
    print_table(o, t);
    emit(o, "theory", {{"theory", t}});
    return 0;
}

int cmd_invert(const Options& o) {
    const SymTriCirculant m{o.c, o.b, o.n};
    m.validate();
    const auto exact = circulant_inverse_row(m);
    const auto asym = asymptotic_inverse_row(m);
    io::Table t{{"k", "exact", "asymptotic", "difference"}, {}};
    for (int k = 1; k <= m.n; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        t.add({static_cast<long long>(k), exact[i], asym[i], exact[i] - asym[i]});
    }
    print_table(o, t);
    const auto lim = inverse_row_asymptotic(m);
    emit(o, "invert", {{"invert", t}},
         {{"determinant", circulant_det(m)}, {"lambda11_limit", lim.lambda11}, {"ratio", lim.ratio}});
    return 0;
}

int cmd_minimize(const Options& o) {
    const ModelParams p = params_of(o);
    const Topology topo = topology_of(o);
    const double lambda = o.lambda ? *o.lambda : calibrate_lambda(p, topo);
    const MinProfile prof = minimize(p, lambda, topo);
    const double a = a_star(p, lambda);
    io::Table t{{"k", "a_k", "deviation"}, {}};
    long double total = 0.0L;
    for (std::size_t k = 0; k < prof.a_vec.size(); ++k) {
        t.add({static_cast<long long>(k + 1), prof.a_vec[k], prof.a_vec[k] - a});
        total += prof.a_vec[k];
    }
    io::Table s{{"lambda", "a_star", "total_length", "residual_norm", "iterations", "eta",
                 "fitted_rate", "fit_r2"},
                {}};
    double rate = std::nan(""), r2 = std::nan("");
    if (topo == Topology::chain && p.gamma > 0.0) {
        try {
            const DecayFit fit = boundary_decay_fit(prof, p);
            rate = fit.rate;
            r2 = fit.r2;
        } catch (const DomainError&) {
            // too few points above round-off for a fit; left as nan
        }
    }
    s.add({lambda, a, static_cast<double>(total), prof.residual_norm,
           static_cast<long long>(prof.iterations), eta(p), rate, r2});
    if (!o.quiet) {
        io::write_csv(s, std::cout);
    }
    emit(o, "minimize", {{"profile", t}, {"summary", s}});
    return 0;
}

int cmd_sample(const Options& o) {
    SamplerConfig cfg;
    cfg.params = params_of(o);
    cfg.ensemble.topology = topology_of(o);
    cfg.ensemble.constrained = o.constrained;
    if (!o.constrained) cfg.ensemble.lambda = o.lambda ? *o.lambda : calibrate_lambda(cfg.params, cfg.ensemble.topology);
    cfg.sweeps = o.sweeps;
    cfg.burnin_sweeps = o.burnin;
    cfg.thin = o.thin;
    cfg.step_size = o.step;
    cfg.seed = seed_of(o);
    cfg.chains = o.chains;
    cfg.max_lag = o.lags;
    cfg.num_batches = o.batches;
    cfg.nonlocal_fraction = o.nonlocal;
    cfg.threads = o.threads;
    cfg.dump_path = o.dump;
    cfg.validate();
    const RunResult r = run(cfg);

    long double mean_total = 0.0L;
    for (const auto& m : r.mean_spacing) mean_total += m.value;

    io::Table summary{{"n", "topology", "constrained", "lambda", "sweeps", "chains", "acceptance_rate",
                       "acceptance_flagged", "ess_estimate", "max_sum_deviation",
                       "mean_sum_deviation", "max_energy_drift"},
                      {}};
    summary.add({static_cast<long long>(r.n), std::string(to_string(r.ensemble.topology)),
                 r.ensemble.constrained, r.ensemble.lambda, o.sweeps, static_cast<long long>(o.chains),
                 r.acceptance_rate, r.acceptance_flagged, r.ess_estimate, r.max_sum_deviation,
                 static_cast<double>(std::abs(mean_total - 1.0L)), r.max_energy_drift});

    io::Table lags{{"lag", "cov", "cov_se", "corr", "corr_se", "predicted_cov", "n_eff"}, {}};
    for (std::size_t i = 0; i < r.lag_cov.size(); ++i) {
        const auto& c = r.lag_cov[i];
        double pred = std::nan("");
        if (r.ensemble.topology == Topology::ring) {
            pred = r.ensemble.constrained
                       ? predicted_cov(cfg.params, c.lag, true)
                       : circulant_inverse_row(ring_hessian(cfg.params, a_star(cfg.params, r.ensemble.lambda)))
                             [static_cast<std::size_t>(c.lag)];
        }
        lags.add({static_cast<long long>(c.lag), c.value, c.se, r.lag_corr[i].value, r.lag_corr[i].se,
                  pred, c.n_eff});
    }

    io::Table sites{{"site", "mean", "se"}, {}};
    for (std::size_t k = 0; k < r.mean_spacing.size(); ++k)
        sites.add({static_cast<long long>(k + 1), r.mean_spacing[k].value, r.mean_spacing[k].se});

    io::Table chains{{"chain", "stream_seed", "acceptance_rate", "final_step", "max_energy_drift",
                      "max_sum_deviation", "moves"},
                     {}};
    for (const auto& d : r.chains)
        chains.add({static_cast<long long>(d.chain_id), std::to_string(d.stream_seed), d.acceptance_rate,
                    d.final_step, d.max_energy_drift, d.max_sum_deviation, d.moves});

    if (!o.quiet) io::write_csv(summary, std::cout);
    emit(o, "sample", {{"summary", summary}, {"lags", lags}, {"sites", sites}, {"chains", chains}});
    return 0;
}

int cmd_verify(const Options& o) {
    const auto results = acceptance::run_suite(o.suite, std::cout, seed_of(o, acceptance::kDefaultSeed));
    io::Table t{{"criterion", "title", "anchor", "pass", "seconds", "budget_seconds", "detail"}, {}};
    for (const auto& r : results)
        t.add({r.id, r.title, r.anchor, r.pass, r.seconds, r.budget_seconds, r.detail});
    const bool ok = acceptance::all_passed(results);
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::cout << (ok ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
    emit(o, "verify", {{"verify", t}});
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spacing statistics of nearest and next-nearest 1/r chains and rings"};
    app.set_version_flag("--version", std::string(COULOMB_VERSION));
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key=value file; command-line flags take precedence");

    Options o;
    app.add_option("--beta", o.beta, "nearest-neighbour coupling (> 0)");
    app.add_option("--gamma", o.gamma, "next-nearest coupling (0 <= gamma <= beta)");
    app.add_option("--n", o.n, "number of spacings (matrix size for invert)");
    app.add_option("--lambda", o.lambda, "tilt; defaults to the calibrated value");
    app.add_option("--seed", o.seed, "64-bit seed");
    app.add_option("--sweeps", o.sweeps, "measurement sweeps (n moves each)");
    app.add_option("--burnin", o.burnin, "burn-in sweeps; step adaptation runs only here");
    app.add_option("--thin", o.thin, "record every thin-th sweep");
    app.add_option("--chains", o.chains, "independent replicas");
    app.add_option("--step", o.step, "initial proposal half-width (0 = automatic)");
    app.add_option("--ensemble", o.ensemble, "chain or ring")
        ->check(CLI::IsMember({"chain", "ring"}));
    app.add_option("--constrained", o.constrained, "true: sum fixed to one; false: tilted");
    app.add_option("--out", o.out, "output file (siblings and manifest are written next to it)");
    app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--lags", o.lags, "largest lag reported");
    app.add_option("--batches", o.batches, "batches for batch-means standard errors");
    app.add_option("--nonlocal", o.nonlocal, "fraction of constrained moves with a random partner");
    app.add_option("--threads", o.threads, "worker threads for replicas (0 = all cores)");
    app.add_option("--dump", o.dump, "raw thinned samples as CSV");
    app.add_option("--c", o.c, "diagonal entry (invert)");
    app.add_option("--b", o.b, "off-diagonal entry (invert)");
    app.add_flag("--quiet", o.quiet, "no tables on stdout");

    auto* theory = app.add_subcommand("theory", "closed-form decay ratios and covariances");
    auto* invert = app.add_subcommand("invert", "first row of the inverse tridiagonal circulant");
    auto* minim = app.add_subcommand("minimize", "minimiser of the tilted energy");
    auto* sample = app.add_subcommand("sample", "Metropolis sampling");
    auto* verify = app.add_subcommand("verify", "acceptance suite; exit 0 iff every criterion passes");
    verify->add_option("suite", o.suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*theory) return cmd_theory(o);
        if (*invert) return cmd_invert(o);
        if (*minim) return cmd_minimize(o);
        if (*sample) return cmd_sample(o);
        if (*verify) return cmd_verify(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
