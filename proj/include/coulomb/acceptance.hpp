#pragma once

// Acceptance suite shared by `coulomb verify` and the acceptance test binary.
// Each criterion runs with fixed seeds and reports one pass/fail line.
//
// Suites: "fast" holds the exact-formula checks and the smaller Monte Carlo
// runs; "full" adds the long covariance runs at N up to 512.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coulomb/circulant.hpp"
#include "coulomb/estimate.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/sampler.hpp"
#include "coulomb/theory.hpp"

namespace coulomb::acceptance {

inline constexpr std::uint64_t kDefaultSeed = 20261016;

struct CriterionResult {
    std::string id;
    std::string title;
    std::string anchor;  ///< the property being checked
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
    double budget_seconds = 0.0;
};

struct Criterion {
    std::string id;
    std::string title;
    std::string anchor;
    double budget_seconds;
    bool fast;
    std::function<bool(std::uint64_t seed, std::string& detail)> check;
};

namespace detail {

inline std::string printf_str(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

inline void append(std::string& s, const std::string& part) {
    if (!s.empty()) s += "; ";
    s += part;
}

inline Eigen::MatrixXd dense_circulant(double c, double b, int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = c;
        m(i, (i + 1) % n) += b;
        m((i + 1) % n, i) += b;
    }
    return m;
}

inline SamplerConfig base_config(const ModelParams& p, std::uint64_t seed) {
    SamplerConfig c;
    c.params = p;
    c.seed = seed;
    c.chains = 1;
    c.burnin_sweeps = 1000;
    return c;
}

// -- 1 ----------------------------------------------------------------------
inline bool circulant_exactness(std::uint64_t, std::string& out) {
    double worst_id = 0.0, worst_oracle = 0.0;
    int cases = 0;
    for (int n : {4, 5, 8, 16, 32, 64})
        for (double c : {1.0, 2.0, 5.0})
            for (double ratio : {-0.49, -0.3, -0.1, 0.0, 0.1, 0.3, 0.49}) {
                const double b = ratio * c;
                const std::vector<double> row = circulant_inverse_row({c, b, n});
                Eigen::MatrixXd inv(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) inv(i, j) = row[static_cast<std::size_t>((j - i + n) % n)];
                const Eigen::MatrixXd m = dense_circulant(c, b, n);
                worst_id = std::max(worst_id, (m * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
                const Eigen::MatrixXd oracle = m.partialPivLu().inverse();
                worst_oracle = std::max(worst_oracle, (oracle - inv).cwiseAbs().maxCoeff());
                ++cases;
            }
    out = printf_str("%d cases, max|M*Lambda - I| = %.2e, max|Lambda - dense inverse| = %.2e", cases,
                     worst_id, worst_oracle);
    return worst_id <= 1e-9 && worst_oracle <= 1e-9;
}

// -- 2 ----------------------------------------------------------------------
// Fits log|Lambda_1k(n) - asymptote_k| against n for fixed k and compares the
// base with max(b/x1, x2/x1).
inline bool asymptotic_inverse(std::uint64_t, std::string& out) {
    bool ok = true;
    double worst = 0.0;
    int fits = 0;
    for (auto [c, b] : {std::pair{2.0, 0.5}, std::pair{2.0, -0.5}, std::pair{1.0, 0.3},
                        std::pair{3.0, 1.2}, std::pair{1.0, -0.45}}) {
        const auto roots = characteristic_roots(c, b);
        const double expect = std::max(std::abs(b) / roots.x1, roots.x2 / roots.x1);
        const InverseAsymptotic asym = inverse_row_asymptotic({c, b, 4});
        for (int k : {1, 2, 3}) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int m = 0;
            for (int n = std::max(4, 2 * k + 2); n <= 200; ++n) {
                const double exact = circulant_inverse_row({c, b, n})[static_cast<std::size_t>(k - 1)];
                const double limit = asym.lambda11 * std::pow(-asym.ratio, k - 1);
                const double diff = std::abs(exact - limit);
                if (diff < 1e-12 * asym.lambda11) break;
                sx += n;
                sy += std::log(diff);
                sxx += double(n) * n;
                sxy += n * std::log(diff);
                ++m;
            }
            if (m < 4) {
                ok = false;
                append(out, printf_str("c=%g b=%g k=%d: only %d usable sizes", c, b, k, m));
                continue;
            }
            const double slope = (sxy - sx * sy / m) / (sxx - sx * sx / m);
            const double base = std::exp(slope);
            worst = std::max(worst, std::abs(base - expect));
            if (std::abs(base - expect) > 0.02) {
                ok = false;
                append(out, printf_str("c=%g b=%g k=%d: base %.4f vs %.4f", c, b, k, base, expect));
            }
            ++fits;
        }
    }
    append(out, printf_str("%d fits, max|base - max(b/x1, x2/x1)| = %.4f", fits, worst));
    return ok;
}

// -- 3 ----------------------------------------------------------------------
inline bool delta_identity(std::uint64_t, std::string& out) {
    double worst = 0.0;
    int cases = 0;
    for (double beta : {0.5, 1.0, 2.0})
        for (int i = 0; i <= 20; ++i) {
            const ModelParams p{beta, beta * i / 20.0, 64};
            const double d = delta(p);
            const double e = eta(p);
            for (double a : {1.0, 1.0 / 64.0, 0.37}) {
                const double r = inverse_row_asymptotic(ring_hessian(p, a)).ratio;
                worst = std::max({worst, std::abs(d - e), std::abs(d - r), std::abs(e - r)});
                ++cases;
            }
        }
    out = printf_str("%d cases, max pairwise difference %.2e", cases, worst);
    return worst <= 1e-12;
}

// -- 4 ----------------------------------------------------------------------
inline bool boundary_decay(std::uint64_t, std::string& out) {
    const ModelParams p{1.0, 1.0, 200};
    const double lambda = calibrate_lambda(p, Topology::chain);
    const MinProfile prof = minimize_chain(p, lambda);
    const DecayFit fit = boundary_decay_fit(prof, p);
    const double target = eta(p);
    out = printf_str("lambda=%.6g, rate %.6f vs eta %.6f (rel %.2e), r2 %.6f over k=%d..%d", lambda,
                     fit.rate, target, std::abs(fit.rate / target - 1.0), fit.r2, fit.first_k,
                     fit.last_k);
    return !fit.immediate_decay && std::abs(fit.rate / target - 1.0) <= 0.05 && fit.r2 >= 0.99;
}

// -- 5 ----------------------------------------------------------------------
inline bool calibration(std::uint64_t, std::string& out) {
    bool ok = true;
    for (ModelParams p : {ModelParams{1.0, 1.0, 100}, ModelParams{1.0, 1.0, 200},
                          ModelParams{1.0, 1.0, 500}, ModelParams{2.0, 0.5, 150}}) {
        const double expect = 0.5 * (2.0 * p.beta + p.gamma) * p.n * p.n;
        const double ring = calibrate_lambda(p, Topology::ring);
        const double chain = calibrate_lambda(p, Topology::chain);
        const double rel = std::abs(chain / expect - 1.0);
        ok = ok && ring == expect && rel <= 0.03;
        append(out, printf_str("b=%g g=%g N=%d: ring exact=%s, chain rel %.4f", p.beta, p.gamma, p.n,
                               ring == expect ? "yes" : "no", rel));
    }
    return ok;
}

// -- 6 ----------------------------------------------------------------------
inline bool mean_spacing(std::uint64_t seed, std::string& out) {
    bool ok = true;
    for (int n : {16, 64}) {
        SamplerConfig c = base_config({1.0, 1.0, n}, seed + static_cast<std::uint64_t>(n));
        c.ensemble = {Topology::ring, true, 0.0};
        c.sweeps = 10000;
        c.max_lag = 0;
        const RunResult r = run(c);
        double worst = 0.0;
        for (const auto& m : r.mean_spacing)
            worst = std::max(worst, std::abs(m.value - 1.0 / n) / m.se);
        ok = ok && worst <= 3.0;
        append(out, printf_str("N=%d max|mean - 1/N|/SE = %.2f", n, worst));
    }
    return ok;
}

// -- 7 ----------------------------------------------------------------------
inline bool lag_law_tilted(std::uint64_t seed, std::string& out) {
    const ModelParams p{1.0, 1.0, 64};
    SamplerConfig c = base_config(p, seed);
    c.ensemble = {Topology::ring, false, calibrate_lambda(p, Topology::ring)};
    c.sweeps = 100000;
    c.max_lag = 2;
    const RunResult r = run(c);
    const double d = delta(p);
    const CovEstimate& c1 = r.lag_corr[1];
    const CovEstimate& c2 = r.lag_corr[2];
    const bool lag1 = std::abs(c1.value + d) <= 0.2 * d && c1.value < 0.0 && -c1.value >= 5.0 * c1.se;
    const bool lag2 = c2.value >= 3.0 * c2.se && c2.value >= 0.5 * d * d && c2.value <= 2.0 * d * d;
    out = printf_str("corr1 %.5f +- %.5f (target %.5f), corr2 %.5f +- %.5f (target %.5f), acc %.3f",
                     c1.value, c1.se, -d, c2.value, c2.se, d * d, r.acceptance_rate);
    return lag1 && lag2;
}

// -- 8 ----------------------------------------------------------------------
inline bool conditional_correction_law(std::uint64_t seed, std::string& out) {
    const ModelParams big{1.0, 1.0, 512};
    SamplerConfig c = base_config(big, seed);
    c.ensemble = {Topology::ring, true, 0.0};
    c.sweeps = 100000;
    c.max_lag = 2;
    const RunResult r = run(c);
    const double d = delta(big);
    const double target = -d - conditional_correction(big);
    const CovEstimate& c1 = r.lag_corr[1];
    const bool ok_big = std::abs(c1.value - target) <= 3.0 * c1.se;

    const ModelParams small{1.0, 1.0, 16};
    SamplerConfig cs = base_config(small, seed + 1);
    cs.ensemble = {Topology::ring, true, 0.0};
    cs.sweeps = 100000;
    cs.max_lag = 2;
    const RunResult rs = run(cs);
    const auto signs = sign_pattern(rs.lag_cov, small, true);
    const bool ok_small = predicted_cov(small, 2, true) < 0.0 && rs.lag_cov[2].value < 0.0 &&
                          signs[2].agrees;
    out = printf_str("N=512 corr1 %.6f +- %.6f vs %.6f (z %.2f); N=16 cov2 %.3e +- %.1e observed %s predicted %s",
                     c1.value, c1.se, target, (c1.value - target) / c1.se, rs.lag_cov[2].value,
                     rs.lag_cov[2].se, to_string(signs[2].observed), to_string(signs[2].predicted));
    return ok_big && ok_small;
}

// -- 9 ----------------------------------------------------------------------
inline bool variance_scaling(std::uint64_t seed, std::string& out) {
    std::vector<std::pair<double, double>> pts;
    double amp64 = 0.0;
    for (int n : {16, 32, 64, 128}) {
        SamplerConfig c = base_config({1.0, 1.0, n}, seed + static_cast<std::uint64_t>(n));
        c.ensemble = {Topology::ring, true, 0.0};
        c.sweeps = 100000;
        c.max_lag = 0;
        const RunResult r = run(c);
        pts.emplace_back(n, r.lag_cov[0].value);
        if (n == 64) amp64 = r.lag_cov[0].value * n * n * n;
    }
    const ScalingFit fit = scaling_fit(pts);

    SamplerConfig c0 = base_config({1.0, 0.0, 64}, seed + 1000);
    c0.ensemble = {Topology::ring, true, 0.0};
    c0.sweeps = 100000;
    c0.max_lag = 0;
    const double amp0 = run(c0).lag_cov[0].value * 64.0 * 64.0 * 64.0;

    const double target1 = 1.0 / std::sqrt(6.0);
    const double target0 = 0.5;
    out = printf_str("slope %.4f (r2 %.5f), N^3 Var at 64: %.5f vs %.5f (rel %.3f), gamma=0: %.5f vs %.5f (rel %.3f)",
                     fit.slope, fit.r2, amp64, target1, amp64 / target1 - 1.0, amp0, target0,
                     amp0 / target0 - 1.0);
    return std::abs(fit.slope + 3.0) <= 0.15 && std::abs(amp64 / target1 - 1.0) <= 0.15 &&
           std::abs(amp0 / target0 - 1.0) <= 0.15;
}

// -- 10 ---------------------------------------------------------------------
inline bool gaussian_approximation(std::uint64_t seed, std::string& out) {
    const ModelParams p{1.0, 1.0, 32};
    SamplerConfig c = base_config(p, seed);
    c.ensemble = {Topology::ring, false, calibrate_lambda(p, Topology::ring)};
    c.sweeps = 100000;
    c.max_lag = 5;
    const RunResult r = run(c);
    const auto rows = gaussian_crosscheck(p, c.ensemble.lambda, r.lag_cov);
    bool ok = true;
    std::string zs;
    for (const auto& e : rows) {
        ok = ok && std::abs(e.z) <= 3.0;
        zs += printf_str("%s%d:%.2f", zs.empty() ? "" : " ", e.lag, e.z);
    }
    out = printf_str("z by lag [%s]; lag0 mcmc/hessian = %.4f", zs.c_str(),
                     rows[0].mcmc / rows[0].predicted);
    return ok;
}

// -- 11 ---------------------------------------------------------------------
inline bool clt(std::uint64_t seed, std::string& out) {
    const ModelParams p{1.0, 1.0, 64};
    SamplerConfig c = base_config(p, seed);
    c.ensemble = {Topology::ring, false, calibrate_lambda(p, Topology::ring)};
    c.sweeps = 100000;
    c.thin = 25;
    c.max_lag = 0;
    c.record_sums = true;
    const RunResult r = run(c);
    const NormalityResult norm = normality_check(r.sum_series);
    const BatchMeans bm = batch_means(r.sum_series, 20);

    std::mt19937_64 rng(seed);
    std::cauchy_distribution<double> cauchy(0.0, 1.0);
    std::vector<double> control(r.sum_series.size());
    for (double& v : control) v = cauchy(rng);
    const NormalityResult neg = normality_check(control);

    out = printf_str("m=%zu (batch ESS %.0f), KS %.4f < %.4f: %s; Cauchy KS %.4f: %s", r.sum_series.size(),
                     bm.n_eff, norm.ks_distance, norm.threshold, norm.pass ? "pass" : "fail",
                     neg.ks_distance, neg.pass ? "pass (unexpected)" : "rejected");
    return r.sum_series.size() >= 2000 && bm.n_eff >= 2000.0 && norm.pass && !neg.pass;
}

// -- 12 ---------------------------------------------------------------------
// Joint law of (x1, x2) for the constrained N = 3 ring on a 20 x 20 grid over
// the simplex. Cell probabilities come from nested adaptive quadrature of the
// Gibbs weight, clipped to x1 + x2 < 1.
inline std::vector<double> toy_cell_probabilities(const ModelParams& p, int bins) {
    using Q = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double h = 1.0 / bins;
    // Shift by the minimum energy 3 * (3 beta + 3 gamma / 2) to keep weights O(1).
    const double e0 = 9.0 * p.beta + 4.5 * p.gamma;
    auto weight = [&](double x1, double x2) {
        const double x3 = 1.0 - x1 - x2;
        if (!(x1 > 0.0 && x2 > 0.0 && x3 > 0.0)) return 0.0;
        const std::array<double, 3> x{x1, x2, x3};
        return std::exp(e0 - circular_energy(std::span<const double>(x), p));
    };
    std::vector<double> probs(static_cast<std::size_t>(bins) * bins, 0.0);
    for (int i = 0; i < bins; ++i)
        for (int j = 0; i + j < bins; ++j) {
            const double lo1 = i * h, hi1 = (i + 1) * h, lo2 = j * h, hi2 = (j + 1) * h;
            auto inner = [&](double x1) {
                const double top = std::min(hi2, 1.0 - x1);
                if (top <= lo2) return 0.0;
                return Q::integrate([&](double x2) { return weight(x1, x2); }, lo2, top, 10, 1e-11);
            };
            // `inner` has a kink where the diagonal enters the cell, x1 = 1 - hi2.
            const double kink = std::clamp(1.0 - hi2, lo1, hi1);
            double v = 0.0;
            if (kink > lo1) v += Q::integrate(inner, lo1, kink, 10, 1e-11);
            if (hi1 > kink) v += Q::integrate(inner, kink, hi1, 10, 1e-11);
            probs[static_cast<std::size_t>(i) * bins + j] = v;
        }
    return probs;
}

inline bool toy_exactness(std::uint64_t seed, std::string& out) {
    const ModelParams p{1.0, 1.0, 3};
    const int bins = 20;
    SamplerConfig c = base_config(p, seed);
    c.ensemble = {Topology::ring, true, 0.0};
    c.sweeps = 200000;
    c.thin = 10;
    c.max_lag = 0;
    std::vector<double> counts(static_cast<std::size_t>(bins) * bins, 0.0);
    MetropolisChain chain(c, 0);
    chain.run([&](std::span<const double> x) {
        const int i = std::min(bins - 1, static_cast<int>(x[0] * bins));
        const int j = std::min(bins - 1, static_cast<int>(x[1] * bins));
        counts[static_cast<std::size_t>(i) * bins + j] += 1.0;
    });
    const std::vector<double> probs = toy_cell_probabilities(p, bins);
    const ChiSquareResult chi = chi_square_test(counts, probs);
    out = printf_str("%.0f samples, chi2 %.1f on %d dof, p = %.4f, acceptance %.3f",
                     std::accumulate(counts.begin(), counts.end(), 0.0), chi.statistic, chi.dof,
                     chi.p_value, chain.diagnostics().acceptance_rate);
    return chi.p_value > 0.01;
}

// -- envelope note ----------------------------------------------------------
inline bool chain_vs_ring(std::uint64_t seed, std::string& out) {
    const ModelParams p{1.0, 1.0, 128};
    SamplerConfig cr = base_config(p, seed);
    cr.ensemble = {Topology::ring, true, 0.0};
    cr.sweeps = 100000;
    cr.max_lag = 1;
    const RunResult ring = run(cr);

    SamplerConfig cc = cr;
    cc.seed = seed + 1;
    cc.ensemble.topology = Topology::chain;
    const RunResult chain = run(cc);
    // Bulk: start sites whose distance to either end is at least n/4.
    const SiteWindow bulk{p.n / 4, 3 * p.n / 4 - 1};
    const auto corr_chain = lag_correlations(chain.moments, bulk);
    const double a = corr_chain[1].value, sa = corr_chain[1].se;
    const double b = ring.lag_corr[1].value, sb = ring.lag_corr[1].se;
    const double z = (a - b) / std::sqrt(sa * sa + sb * sb);
    out = printf_str("chain bulk corr1 %.5f +- %.5f, ring corr1 %.5f +- %.5f, z %.2f", a, sa, b, sb, z);
    return std::abs(z) <= 3.0;
}

}  // namespace detail

inline std::vector<Criterion> criteria() {
    using namespace detail;
    return {
        {"1", "circulant inverse exactness", "exact first row of the inverse circulant", 5, true,
         circulant_exactness},
        {"2", "asymptotic inverse row", "geometric convergence of the inverse row in n", 5, true,
         asymptotic_inverse},
        {"3", "delta = eta = b/x1", "decay ratio identities", 1, true, delta_identity},
        {"4", "minimiser boundary decay", "boundary layer contraction rate eta", 10, true,
         boundary_decay},
        {"5", "lambda calibration", "unbiased multiplier (2 beta + gamma) N^2 / 2", 10, true,
         calibration},
        {"6", "mean spacing 1/N", "constrained ring is evenly spaced on average", 120, true,
         mean_spacing},
        {"7", "antiferromagnetic lag law", "tilted ring correlations (-delta)^lag", 900, false,
         lag_law_tilted},
        {"8", "conditional -1/N correction", "constrained ring covariance correction", 1800, false,
         conditional_correction_law},
        {"9", "variance scaling N^-3", "variance amplitude 1/sqrt(4 beta^2 + 2 beta gamma)", 1200,
         false, variance_scaling},
        {"10", "gaussian approximation", "tilted ring covariance vs inverse Hessian", 300, true,
         gaussian_approximation},
        {"11", "central limit of the sum", "normality of the standardised total length", 300, true,
         clt},
        {"12", "N=3 toy exactness", "joint spacing law vs quadrature of Gibbs weights", 120, true,
         toy_exactness},
        {"N1", "chain vs ring in the bulk", "open chain matches the ring away from the ends", 1800,
         false, chain_vs_ring},
    };
}

inline bool known_suite(const std::string& suite) { return suite == "fast" || suite == "full"; }

/// Runs a suite, printing one line per criterion as it completes.
inline std::vector<CriterionResult> run_suite(const std::string& suite, std::ostream& log,
                                              std::uint64_t seed = kDefaultSeed) {
    if (!known_suite(suite)) throw DomainError("unknown suite '" + suite + "' (expected fast or full)");
    std::vector<CriterionResult> results;
    for (const Criterion& c : criteria()) {
        if (suite == "fast" && !c.fast) continue;
        CriterionResult r{c.id, c.title, c.anchor, false, "", 0.0, c.budget_seconds};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.pass = c.check(seed, r.detail);
        } catch (const std::exception& e) {
            r.pass = false;
            detail::append(r.detail, std::string("error: ") + e.what());
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.seconds > r.budget_seconds) {
            r.pass = false;
            detail::append(r.detail, detail::printf_str("over the %.0f s budget", r.budget_seconds));
        }
        log << (r.pass ? "PASS " : "FAIL ") << "criterion " << r.id << ": " << r.title << " ["
            << r.anchor << "] " << r.detail << " ("
            << detail::printf_str("%.2f", r.seconds) << " s)\n";
        log.flush();
        results.push_back(std::move(r));
    }
    return results;
}

inline bool all_passed(const std::vector<CriterionResult>& rs) {
    for (const auto& r : rs)
        if (!r.pass) return false;
    return !rs.empty();
}

}  // namespace coulomb::acceptance
