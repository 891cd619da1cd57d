#pragma once

// Statistical post-processing of spacing samples.
//
// Lag covariances are accumulated per batch as per-site sums of x_j and of
// x_j x_{j+l}. Any site window can then be evaluated after the fact, and the
// batch-to-batch spread gives a batch-means standard error that absorbs the
// Markov-chain autocorrelation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "coulomb/circulant.hpp"
#include "coulomb/model.hpp"
#include "coulomb/theory.hpp"

namespace coulomb {

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct CovEstimate {
    int lag = 0;
    double value = 0.0;
    double se = 0.0;     ///< batch-means standard error
    double n_eff = 0.0;  ///< independent Gaussian pairs giving the same se
    bool degenerate = false;  ///< zero variance input; se carries no information
};

/// Start sites j (0-based, inclusive) over which lag statistics are averaged.
/// `last < 0` means "to the end".
struct SiteWindow {
    int first = 0;
    int last = -1;
};

/// Batched per-site first and lagged second moments.
class LagMoments {
public:
    LagMoments() = default;

    LagMoments(int n, int max_lag, bool cyclic, std::size_t batch_len, int num_batches)
        : n_(n), max_lag_(max_lag), cyclic_(cyclic), batch_len_(batch_len),
          num_batches_(num_batches) {
        if (n < 1) throw DomainError("sample dimension must be positive");
        if (max_lag < 0 || max_lag >= n) throw DomainError("max_lag out of range");
        if (batch_len < 1 || num_batches < 1) throw DomainError("need at least one batch");
        batches_.reserve(static_cast<std::size_t>(num_batches));
    }

    int dimension() const noexcept { return n_; }
    int max_lag() const noexcept { return max_lag_; }
    bool cyclic() const noexcept { return cyclic_; }
    std::size_t batch_len() const noexcept { return batch_len_; }
    /// Completed batches (appended replicas included).
    int batches() const noexcept {
        int full = 0;
        for (const auto& b : batches_) full += b.count == batch_len_;
        return full;
    }
    bool full() const noexcept {
        return !batches_.empty() && static_cast<int>(batches_.size()) >= num_batches_ &&
               batches_.back().count == batch_len_;
    }

    /// Adds one sample; samples beyond num_batches * batch_len are ignored.
    void add(std::span<const double> x) {
        if (static_cast<int>(x.size()) != n_) throw DomainError("sample dimension mismatch");
        if (batches_.empty() || batches_.back().count == batch_len_) {
            if (static_cast<int>(batches_.size()) >= num_batches_) return;
            if (batches_.empty()) {
                shift_ = std::accumulate(x.begin(), x.end(), 0.0) / n_;
            }
            batches_.push_back(Batch(n_, max_lag_));
        }
        Batch& b = batches_.back();
        for (int j = 0; j < n_; ++j) {
            const double xj = x[j] - shift_;
            b.sum[j] += xj;
            double* prod = &b.prod[static_cast<std::size_t>(j) * (max_lag_ + 1)];
            for (int l = 0; l <= max_lag_; ++l) {
                int k = j + l;
                if (k >= n_) {
                    if (!cyclic_) break;
                    k -= n_;
                }
                prod[l] += xj * (x[k] - shift_);
            }
        }
        ++b.count;
    }

    /// Appends the batches of an independent replica (same layout).
    void append(const LagMoments& other) {
        if (other.n_ != n_ || other.max_lag_ != max_lag_ || other.cyclic_ != cyclic_ ||
            other.batch_len_ != batch_len_)
            throw DomainError("incompatible moment accumulators");
        for (Batch b : other.batches_) {
            if (b.count != batch_len_) continue;
            // Re-express the replica's sums around this accumulator's shift.
            const double d = other.shift_ - shift_;
            const double t = static_cast<double>(b.count);
            for (int j = 0; j < n_; ++j) {
                for (int l = 0; l <= max_lag_; ++l) {
                    int k = j + l;
                    if (k >= n_) {
                        if (!cyclic_) break;
                        k -= n_;
                    }
                    double& pr = b.prod[static_cast<std::size_t>(j) * (max_lag_ + 1) + l];
                    pr += d * (b.sum[j] + b.sum[k]) + d * d * t;
                }
            }
            for (double& s : b.sum) s += d * t;
            batches_.push_back(std::move(b));
        }
        num_batches_ = static_cast<int>(batches_.size());
    }

    // Per-batch (or pooled, batch = -1) window-averaged covariance at a lag.
    double window_cov(int lag, SiteWindow w, int batch) const {
        const auto [first, last] = resolve(w, lag);
        double acc = 0.0;
        double t = 0.0;
        std::vector<double> sum(static_cast<std::size_t>(n_), 0.0);
        std::vector<double> prod(static_cast<std::size_t>(last - first + 1), 0.0);
        for (int bi = 0; bi < static_cast<int>(batches_.size()); ++bi) {
            if (batch >= 0 && bi != batch) continue;
            const Batch& b = batches_[bi];
            if (b.count != batch_len_) continue;
            t += static_cast<double>(b.count);
            for (int j = 0; j < n_; ++j) sum[j] += b.sum[j];
            for (int j = first; j <= last; ++j)
                prod[j - first] += b.prod[static_cast<std::size_t>(j) * (max_lag_ + 1) + lag];
        }
        if (t == 0.0) throw DomainError("no completed batches");
        for (int j = first; j <= last; ++j) {
            const int k = (j + lag) % n_;
            acc += prod[j - first] / t - (sum[j] / t) * (sum[k] / t);
        }
        return acc / (last - first + 1);
    }

    /// Per-batch (or pooled) mean of site j.
    double site_mean(int j, int batch) const {
        double s = 0.0, t = 0.0;
        for (int bi = 0; bi < static_cast<int>(batches_.size()); ++bi) {
            if (batch >= 0 && bi != batch) continue;
            const Batch& b = batches_[bi];
            if (b.count != batch_len_) continue;
            s += b.sum[j];
            t += static_cast<double>(b.count);
        }
        if (t == 0.0) throw DomainError("no completed batches");
        return s / t + shift_;
    }

    int stored_batches() const noexcept { return static_cast<int>(batches_.size()); }
    bool batch_complete(int b) const { return batches_.at(static_cast<std::size_t>(b)).count == batch_len_; }

    std::size_t samples() const noexcept {
        std::size_t t = 0;
        for (const auto& b : batches_)
            if (b.count == batch_len_) t += b.count;
        return t;
    }

private:
    struct Batch {
        Batch(int n, int max_lag)
            : sum(static_cast<std::size_t>(n), 0.0),
              prod(static_cast<std::size_t>(n) * (max_lag + 1), 0.0) {}
        std::size_t count = 0;
        std::vector<double> sum;
        std::vector<double> prod;
    };

    std::pair<int, int> resolve(SiteWindow w, int lag) const {
        if (lag < 0 || lag > max_lag_) throw DomainError("lag out of range");
        int first = std::max(0, w.first);
        int last = w.last < 0 ? n_ - 1 : std::min(w.last, n_ - 1);
        if (!cyclic_) last = std::min(last, n_ - 1 - lag);
        if (first > last) throw DomainError("empty site window");
        return {first, last};
    }

    int n_ = 0;
    int max_lag_ = 0;
    bool cyclic_ = false;
    std::size_t batch_len_ = 1;
    int num_batches_ = 0;
    double shift_ = 0.0;
    std::vector<Batch> batches_;
};

namespace detail {

inline double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Standard error of the mean of independent batch values.
inline double batch_se(std::span<const double> v) {
    const std::size_t b = v.size();
    if (b < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(b - 1) / static_cast<double>(b));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

/// Window-averaged lag covariances, pooled over all batches, with
/// batch-means standard errors.
inline std::vector<CovEstimate> lag_covariances(const LagMoments& m, SiteWindow w = {}) {
    const int nb = m.stored_batches();
    if (m.batches() < 1) throw DomainError("no completed batches");
    std::vector<CovEstimate> out;
    const double var0 = m.window_cov(0, w, -1);
    for (int lag = 0; lag <= m.max_lag(); ++lag) {
        CovEstimate e;
        e.lag = lag;
        e.value = m.window_cov(lag, w, -1);
        std::vector<double> per;
        for (int b = 0; b < nb; ++b) if (m.batch_complete(b)) per.push_back(m.window_cov(lag, w, b));
        e.se = detail::batch_se(per);
        e.degenerate = !(var0 > 0.0);
        if (e.degenerate) {
            e.value = 0.0;
            e.se = 0.0;
        }
        e.n_eff = e.se > 0.0 ? (var0 * var0 + e.value * e.value) / (e.se * e.se) : 0.0;
        out.push_back(e);
    }
    return out;
}

/// Lag correlations cov(l) / cov(0) over a site window, with batch-means
/// standard errors of the ratio.
inline std::vector<CovEstimate> lag_correlations(const LagMoments& m, SiteWindow w = {}) {
    const int nb = m.stored_batches();
    if (m.batches() < 1) throw DomainError("no completed batches");
    std::vector<CovEstimate> out;
    const double var0 = m.window_cov(0, w, -1);
    std::vector<double> var_b;
    for (int b = 0; b < nb; ++b) var_b.push_back(m.batch_complete(b) ? m.window_cov(0, w, b) : 0.0);
    for (int lag = 0; lag <= m.max_lag(); ++lag) {
        CovEstimate e;
        e.lag = lag;
        e.degenerate = !(var0 > 0.0);
        if (!e.degenerate) {
            e.value = m.window_cov(lag, w, -1) / var0;
            std::vector<double> per;
            for (int b = 0; b < nb; ++b) if (m.batch_complete(b)) per.push_back(m.window_cov(lag, w, b) / var_b[b]);
            e.se = detail::batch_se(per);
            e.n_eff = e.se > 0.0 ? (1.0 + e.value * e.value) / (e.se * e.se) : 0.0;
        }
        out.push_back(e);
    }
    return out;
}

inline std::vector<Estimate> site_means(const LagMoments& m) {
    const int nb = m.stored_batches();
    std::vector<Estimate> out;
    for (int j = 0; j < m.dimension(); ++j) {
        std::vector<double> per;
        for (int b = 0; b < nb; ++b) if (m.batch_complete(b)) per.push_back(m.site_mean(j, b));
        out.push_back({m.site_mean(j, -1), detail::batch_se(per)});
    }
    return out;
}

/// Effective sample size of the single-site series, averaged over sites:
/// samples / mean_j(batch_len * Var(batch means_j) / s_j^2).
inline double effective_sample_size(const LagMoments& m) {
    const int nb = m.stored_batches();
    if (nb < 2) return static_cast<double>(m.samples());
    double tau = 0.0;
    int used = 0;
    for (int j = 0; j < m.dimension(); ++j) {
        std::vector<double> per;
        for (int b = 0; b < nb; ++b) if (m.batch_complete(b)) per.push_back(m.site_mean(j, b));
        const double se = detail::batch_se(per);
        // Per-site variance from the lag-0 moment restricted to site j.
        const double s2 = m.window_cov(0, {j, j}, -1);
        if (!(s2 > 0.0)) continue;
        tau += se * se * static_cast<double>(m.samples()) / s2;
        ++used;
    }
    if (used == 0) return 0.0;
    tau /= used;
    return static_cast<double>(m.samples()) / std::max(tau, 1e-300);
}

/// Lag covariances of a sample matrix (row = sample), split into
/// `num_batches` equal contiguous batches.
inline std::vector<CovEstimate> lag_covariances(std::span<const std::vector<double>> samples,
                                                int max_lag, bool cyclic,
                                                int num_batches = 20) {
    if (samples.size() < 100) throw DomainError("at least 100 samples are required");
    if (num_batches < 20) throw DomainError("at least 20 batches are required");
    const int n = static_cast<int>(samples.front().size());
    if (2 * max_lag > n) throw DomainError("max_lag must not exceed n/2");
    const std::size_t batch_len = samples.size() / static_cast<std::size_t>(num_batches);
    LagMoments m(n, max_lag, cyclic, batch_len, num_batches);
    for (const auto& s : samples) m.add(s);
    return lag_covariances(m);
}

/// Batch means on a scalar series.
struct BatchMeans {
    double mean;
    double se;
    double n_eff;
};

inline BatchMeans batch_means(std::span<const double> series, int num_batches = 20) {
    if (num_batches < 2) throw DomainError("need at least two batches");
    const std::size_t len = series.size() / static_cast<std::size_t>(num_batches);
    if (len < 1) throw DomainError("series too short for the requested batches");
    std::vector<double> per;
    for (int b = 0; b < num_batches; ++b)
        per.push_back(detail::mean_of(series.subspan(b * len, len)));
    const auto used = series.first(len * static_cast<std::size_t>(num_batches));
    const double mean = detail::mean_of(used);
    double s2 = 0.0;
    for (double x : used) s2 += (x - mean) * (x - mean);
    s2 /= static_cast<double>(used.size() - 1);
    const double se = detail::batch_se(per);
    return {mean, se, se > 0.0 ? s2 / (se * se) : static_cast<double>(used.size())};
}

struct ScalingFit {
    double slope;
    double intercept;
    double r2;
};

/// Least squares of log variance against log N.
inline ScalingFit scaling_fit(std::span<const std::pair<double, double>> points) {
    std::vector<double> ns;
    for (const auto& [n, v] : points) {
        if (!(v > 0.0)) throw DomainError("variances must be positive");
        if (!(n > 0.0)) throw DomainError("sizes must be positive");
        ns.push_back(n);
    }
    std::sort(ns.begin(), ns.end());
    if (std::unique(ns.begin(), ns.end()) - ns.begin() < 3)
        throw DomainError("at least three distinct sizes are required");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double m = static_cast<double>(points.size());
    for (const auto& [n, v] : points) {
        const double x = std::log(n), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double cxx = sxx - sx * sx / m;
    const double cxy = sxy - sx * sy / m;
    const double cyy = syy - sy * sy / m;
    const double slope = cxy / cxx;
    return {slope, (sy - slope * sx) / m, cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0};
}

enum class Sign { positive, negative, indistinguishable };

inline const char* to_string(Sign s) {
    switch (s) {
        case Sign::positive: return "+";
        case Sign::negative: return "-";
        default: return "0";
    }
}

struct SignEntry {
    int lag;
    Sign observed;
    Sign predicted;
    bool agrees;  ///< significant and matching the prediction
    bool contradicts;  ///< significant with the opposite sign
};

/// 3-sigma sign classification of estimates against the leading-order
/// prediction for the ring (conditional adds the sum-one correction).
inline std::vector<SignEntry> sign_pattern(std::span<const CovEstimate> est, const ModelParams& p,
                                           bool conditional, double nsigma = 3.0) {
    std::vector<SignEntry> out;
    for (const auto& e : est) {
        SignEntry s{e.lag, Sign::indistinguishable, Sign::indistinguishable, false, false};
        if (std::abs(e.value) > nsigma * e.se && e.value != 0.0)
            s.observed = e.value > 0.0 ? Sign::positive : Sign::negative;
        if (2 * e.lag <= p.n) {
            const double pred = predicted_cov(p, e.lag, conditional);
            if (pred != 0.0) s.predicted = pred > 0.0 ? Sign::positive : Sign::negative;
        }
        s.agrees = s.observed != Sign::indistinguishable && s.observed == s.predicted;
        s.contradicts = s.observed != Sign::indistinguishable &&
                        s.predicted != Sign::indistinguishable && s.observed != s.predicted;
        out.push_back(s);
    }
    return out;
}

struct CrosscheckEntry {
    int lag;
    double mcmc;
    double se;
    double predicted;  ///< entry of the inverse ring Hessian at a(lambda)
    double z;
};

/// Compares sampled lag covariances of the tilted ring with the first row of
/// the inverse Hessian at the uniform minimum.
inline std::vector<CrosscheckEntry> gaussian_crosscheck(const ModelParams& p, double lambda,
                                                        std::span<const CovEstimate> mcmc) {
    const SymTriCirculant h = ring_hessian(p, a_star(p, lambda));
    const std::vector<double> row = circulant_inverse_row(h);
    std::vector<CrosscheckEntry> out;
    for (const auto& e : mcmc) {
        if (e.lag >= p.n) continue;
        const double pred = row[static_cast<std::size_t>(e.lag)];
        const double z = e.se > 0.0 ? (e.value - pred) / e.se
                                    : (e.value == pred ? 0.0 : std::copysign(INFINITY, e.value - pred));
        out.push_back({e.lag, e.value, e.se, pred, z});
    }
    return out;
}

struct NormalityResult {
    double ks_distance;
    double threshold;  ///< 1.36 / sqrt(m) + slack
    bool pass;
};

/// Kolmogorov-Smirnov distance of the standardised sample from N(0, 1).
inline double ks_distance_normal(std::span<const double> xs) {
    std::vector<double> z(xs.begin(), xs.end());
    const double m = detail::mean_of(z);
    double s2 = 0.0;
    for (double v : z) s2 += (v - m) * (v - m);
    const double sd = std::sqrt(s2 / static_cast<double>(z.size() - 1));
    if (!(sd > 0.0)) return 1.0;
    for (double& v : z) v = (v - m) / sd;
    std::sort(z.begin(), z.end());
    const double cnt = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double f = detail::normal_cdf(z[i]);
        d = std::max({d, (i + 1) / cnt - f, f - i / cnt});
    }
    return d;
}

inline NormalityResult normality_check(std::span<const double> sums, double slack = 0.03) {
    if (sums.size() < 1000) throw DomainError("at least 1000 samples are required");
    const double d = ks_distance_normal(sums);
    const double thr = 1.36 / std::sqrt(static_cast<double>(sums.size())) + slack;
    return {d, thr, d < thr};
}

struct ChiSquareResult {
    double statistic;
    int dof;
    double p_value;
    int bins;  ///< after pooling sparse cells
};

/// Pearson chi-square of counts against cell probabilities. Cells whose
/// expected count is below `min_expected` are pooled into one cell.
inline ChiSquareResult chi_square_test(std::span<const double> observed,
                                       std::span<const double> probs,
                                       double min_expected = 5.0) {
    if (observed.size() != probs.size()) throw DomainError("size mismatch");
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
    double stat = 0.0, pooled_o = 0.0, pooled_e = 0.0;
    int bins = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = total * probs[i] / psum;
        if (e < min_expected) {
            pooled_o += observed[i];
            pooled_e += e;
            continue;
        }
        stat += (observed[i] - e) * (observed[i] - e) / e;
        ++bins;
    }
    if (pooled_e > 0.0) {
        stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
        ++bins;
    }
    const int dof = bins - 1;
    if (dof < 1) throw DomainError("too few populated cells for a chi-square test");
    return {stat, dof, boost::math::gamma_q(0.5 * dof, 0.5 * stat), bins};
}

}  // namespace coulomb
