#pragma once

// Metropolis Monte Carlo for the four spacing ensembles: chain or ring, each
// either constrained to total length one or tilted by lambda * sum x on
// (0, 1]^n.
//
// Constrained moves transfer length u between two spacings, which keeps the
// sum fixed and has unit Jacobian. Half of them (by default) pair a spacing
// with its successor, i.e. move a single particle; the rest pick the partner
// uniformly, which relaxes long-wavelength modes in O(1) sweeps instead of
// O(n^2). Tilted moves shift a single spacing. Every move touches at most two
// sites and four bonds, so energy differences are evaluated locally.
//
// Replicas run on their own threads with independent RNG streams derived from
// (seed, chain id) and are merged in chain-id order, so results depend only on
// the configuration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "coulomb/energy.hpp"
#include "coulomb/estimate.hpp"
#include "coulomb/minimize.hpp"
#include "coulomb/model.hpp"
#include "coulomb/theory.hpp"

namespace coulomb {

struct Ensemble {
    Topology topology = Topology::ring;
    bool constrained = true;
    double lambda = 0.0;  ///< tilt, used when !constrained
};

inline std::string describe(const Ensemble& e) {
    std::string s = to_string(e.topology);
    s += e.constrained ? "/constrained" : "/tilted";
    return s;
}

struct SamplerConfig {
    ModelParams params;
    Ensemble ensemble;
    long long sweeps = 100000;
    long long burnin_sweeps = 1000;
    int thin = 1;
    double step_size = 0.0;  ///< initial half-width of u; <= 0 picks one from the model scale
    std::uint64_t seed = 1;
    int chains = 1;
    bool adapt = true;  ///< step adaptation during burn-in only
    int max_lag = 8;    ///< clamped to n/2
    int num_batches = 20;
    double nonlocal_fraction = 0.5;  ///< constrained moves with a uniformly chosen partner
    bool record_sums = false;        ///< keep the thinned series of sum_k x_k
    std::string dump_path;           ///< raw thinned samples as CSV when non-empty
    int threads = 0;                 ///< 0 = hardware concurrency

    void validate() const {
        params.validate();
        if (sweeps <= 0) throw DomainError("sweeps must be positive");
        if (burnin_sweeps < 0) throw DomainError("burnin_sweeps must be nonnegative");
        if (thin < 1) throw DomainError("thin must be at least 1");
        if (chains < 1) throw DomainError("chains must be at least 1");
        if (num_batches < 2) throw DomainError("num_batches must be at least 2");
        if (sweeps / thin < num_batches) throw DomainError("fewer recorded samples than batches");
        if (max_lag < 0) throw DomainError("max_lag must be nonnegative");
        if (!(nonlocal_fraction >= 0.0 && nonlocal_fraction <= 1.0))
            throw DomainError("nonlocal_fraction must lie in [0, 1]");
        if (!ensemble.constrained && !(ensemble.lambda > 0.0))
            throw DomainError("tilted ensembles require lambda > 0");
        if (!std::isfinite(step_size)) throw DomainError("step_size must be finite");
    }

    int effective_max_lag() const { return std::min(max_lag, params.n / 2); }
};

struct ChainDiagnostics {
    int chain_id = 0;
    std::uint64_t stream_seed = 0;
    double acceptance_rate = 0.0;
    double final_step = 0.0;
    double max_energy_drift = 0.0;   ///< relative, incremental vs recomputed
    double max_sum_deviation = 0.0;  ///< |sum x - 1| over recorded sweeps (constrained)
    long long moves = 0;
    bool acceptance_flagged = false;  ///< acceptance outside [0.05, 0.95]
};

struct RunResult {
    int n = 0;
    Ensemble ensemble;
    std::vector<Estimate> mean_spacing;
    std::vector<CovEstimate> lag_cov;
    std::vector<CovEstimate> lag_corr;
    double acceptance_rate = 0.0;
    double ess_estimate = 0.0;
    double max_sum_deviation = 0.0;
    double max_energy_drift = 0.0;
    bool acceptance_flagged = false;
    std::vector<ChainDiagnostics> chains;
    std::vector<double> sum_series;  ///< thinned sum_k x_k, chains concatenated
    LagMoments moments;              ///< merged batches for custom site windows
};

// ---------------------------------------------------------------------------
// Elementary operations

/// x_i += u, x_j -= u with j the successor of i (cyclic on the ring).
inline std::vector<double> propose_pair_transfer(std::span<const double> state, std::size_t i,
                                                 double u, Topology t) {
    const std::size_t n = state.size();
    if (i >= n || (t == Topology::chain && i + 1 >= n))
        throw DomainError("pair index out of range");
    std::vector<double> out(state.begin(), state.end());
    const std::size_t j = i + 1 == n ? 0 : i + 1;
    out[i] += u;
    out[j] -= u;
    return out;
}

/// x_i += u, x_j -= u for an arbitrary partner j != i.
inline std::vector<double> propose_pair_transfer(std::span<const double> state, std::size_t i,
                                                 std::size_t j, double u) {
    if (i >= state.size() || j >= state.size() || i == j)
        throw DomainError("pair indices out of range");
    std::vector<double> out(state.begin(), state.end());
    out[i] += u;
    out[j] -= u;
    return out;
}

/// x_i += u (tilted ensembles).
inline std::vector<double> propose_site(std::span<const double> state, std::size_t i, double u) {
    if (i >= state.size()) throw DomainError("site index out of range");
    std::vector<double> out(state.begin(), state.end());
    out[i] += u;
    return out;
}

/// Accept with probability min(1, exp(-dH)); +infinity (and NaN) rejects.
template <class Rng>
bool metropolis_accept(double dH, Rng& rng) {
    if (!(dH < std::numeric_limits<double>::infinity())) return false;
    if (dH <= 0.0) return true;
    return std::generate_canonical<double, 53>(rng) < std::exp(-dH);
}

/// Independent 64-bit stream seed for a replica.
inline std::uint64_t stream_seed(std::uint64_t seed, int chain_id) {
    // splitmix64 finaliser over (seed, chain id)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(chain_id) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Single replica

class MetropolisChain {
public:
    MetropolisChain(const SamplerConfig& cfg, int chain_id)
        : cfg_(cfg), p_(cfg.params), n_(static_cast<std::size_t>(cfg.params.n)),
          ring_(cfg.ensemble.topology == Topology::ring),
          lambda_(cfg.ensemble.constrained ? 0.0 : cfg.ensemble.lambda) {
        diag_.chain_id = chain_id;
        diag_.stream_seed = stream_seed(cfg.seed, chain_id);
        std::seed_seq seq{static_cast<std::uint32_t>(diag_.stream_seed),
                          static_cast<std::uint32_t>(diag_.stream_seed >> 32)};
        rng_.seed(seq);
        init_state();
        step_ = cfg.step_size > 0.0 ? cfg.step_size : default_step();
        energy_ = full_energy();
    }

    std::span<const long double> state() const { return x_; }
    double energy() const { return energy_; }
    double step() const { return step_; }
    const ChainDiagnostics& diagnostics() const { return diag_; }

    /// Burn-in, then measurement; samples go to `record`.
    template <class Recorder>
    void run(Recorder&& record) {
        const double target_lo = 0.30, target_hi = 0.40;
        long long batch_moves = 0, batch_acc = 0;
        for (long long s = 0; s < cfg_.burnin_sweeps; ++s) {
            for (std::size_t m = 0; m < n_; ++m) {
                batch_acc += move();
                if (++batch_moves == 100 && cfg_.adapt) {
                    const double rate = batch_acc / 100.0;
                    if (rate > target_hi)
                        step_ = std::min(step_ * 1.1, max_step());
                    else if (rate < target_lo)
                        step_ /= 1.1;
                    batch_moves = batch_acc = 0;
                }
            }
        }

        long long accepted = 0, proposed = 0;
        std::vector<double> sample(n_);
        for (long long s = 0; s < cfg_.sweeps; ++s) {
            for (std::size_t m = 0; m < n_; ++m) {
                accepted += move();
                ++proposed;
                if (++since_resync_ == kResyncMoves) resync();
            }
            if (cfg_.ensemble.constrained) {
                long double sum = 0.0L;
                for (long double v : x_) sum += v;
                diag_.max_sum_deviation =
                    std::max(diag_.max_sum_deviation, static_cast<double>(std::abs(sum - 1.0L)));
            }
            if ((s + 1) % cfg_.thin == 0) {
                for (std::size_t k = 0; k < n_; ++k) sample[k] = static_cast<double>(x_[k]);
                record(std::span<const double>(sample));
            }
        }
        diag_.moves = proposed;
        diag_.acceptance_rate = proposed ? static_cast<double>(accepted) / proposed : 0.0;
        diag_.acceptance_flagged = diag_.acceptance_rate < 0.05 || diag_.acceptance_rate > 0.95;
        diag_.final_step = step_;
    }

    /// Recomputes the energy and records the relative drift of the running value.
    void resync() {
        since_resync_ = 0;
        const double full = full_energy();
        if (std::isfinite(full) && full != 0.0)
            diag_.max_energy_drift =
                std::max(diag_.max_energy_drift, std::abs(energy_ - full) / std::abs(full));
        energy_ = full;
    }

    /// One elementary move; returns 1 if accepted.
    int move() {
        if (cfg_.ensemble.constrained) return transfer_move();
        return site_move();
    }

    /// Energy change when the sites in `sites` take `values` (at most two sites).
    double delta_energy(std::span<const std::size_t> sites, std::span<const long double> values) const {
        auto value_at = [&](std::size_t k) -> double {
            for (std::size_t s = 0; s < sites.size(); ++s)
                if (sites[s] == k) return static_cast<double>(values[s]);
            return static_cast<double>(x_[k]);
        };
        double d = 0.0;
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const double nv = static_cast<double>(values[s]);
            const double ov = static_cast<double>(x_[sites[s]]);
            if (!(nv > kMinSpacing)) return std::numeric_limits<double>::infinity();
            if (lambda_ > 0.0 && nv > 1.0) return std::numeric_limits<double>::infinity();
            d += p_.beta * (1.0 / nv - 1.0 / ov) + lambda_ * (nv - ov);
        }
        if (p_.gamma != 0.0) {
            std::array<std::size_t, 4> bonds{};
            std::size_t nb = 0;
            auto add_bond = [&](std::size_t b) {
                for (std::size_t q = 0; q < nb; ++q)
                    if (bonds[q] == b) return;
                bonds[nb++] = b;
            };
            for (std::size_t k : sites) {
                // bond k joins (k, k+1); bond k-1 joins (k-1, k)
                if (ring_ || k + 1 < n_) add_bond(k);
                if (k > 0) add_bond(k - 1);
                else if (ring_) add_bond(n_ - 1);
            }
            for (std::size_t q = 0; q < nb; ++q) {
                const std::size_t a = bonds[q];
                const std::size_t b = a + 1 == n_ ? 0 : a + 1;
                const double olds = static_cast<double>(x_[a]) + static_cast<double>(x_[b]);
                const double news = value_at(a) + value_at(b);
                d += p_.gamma * (1.0 / news - 1.0 / olds);
            }
        }
        return d;
    }

    double full_energy() const {
        std::vector<double> xd(n_);
        long double s = 0.0L;
        for (std::size_t k = 0; k < n_; ++k) {
            xd[k] = static_cast<double>(x_[k]);
            s += x_[k];
        }
        return detail::energy_unchecked(xd, p_, cfg_.ensemble.topology) +
               lambda_ * static_cast<double>(s);
    }

private:
    static constexpr long long kResyncMoves = 100000;

    void init_state() {
        x_.assign(n_, 1.0L / static_cast<long double>(n_));
        if (!cfg_.ensemble.constrained) {
            const MinProfile prof = minimize(p_, cfg_.ensemble.lambda, cfg_.ensemble.topology);
            for (std::size_t k = 0; k < n_; ++k) x_[k] = std::min(prof.a_vec[k], 1.0);
        }
    }

    double mean_spacing() const {
        return cfg_.ensemble.constrained ? 1.0 / static_cast<double>(n_)
                                         : std::min(1.0, a_star(p_, cfg_.ensemble.lambda));
    }

    double default_step() const {
        const double a = mean_spacing();
        return std::min(0.5 * a, 2.0 * std::sqrt(a * a * a * variance_amplitude(p_)));
    }

    double max_step() const { return cfg_.ensemble.constrained ? 0.5 : 1.0; }

    double draw_u() { return step_ * (2.0 * std::generate_canonical<double, 53>(rng_) - 1.0); }

    std::size_t draw_index(std::size_t bound) {
        return std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng_);
    }

    int transfer_move() {
        std::size_t i, j;
        const bool nonlocal = cfg_.nonlocal_fraction > 0.0 &&
                              std::generate_canonical<double, 53>(rng_) < cfg_.nonlocal_fraction;
        if (nonlocal) {
            i = draw_index(n_);
            j = draw_index(n_ - 1);
            if (j >= i) ++j;
        } else if (ring_) {
            i = draw_index(n_);
            j = i + 1 == n_ ? 0 : i + 1;
        } else {
            i = draw_index(n_ - 1);
            j = i + 1;
        }
        const long double u = draw_u();
        const std::array<std::size_t, 2> sites{i, j};
        const std::array<long double, 2> values{x_[i] + u, x_[j] - u};
        const double dH = delta_energy(sites, values);
        if (!metropolis_accept(dH, rng_)) return 0;
        x_[i] = values[0];
        x_[j] = values[1];
        energy_ += dH;
        return 1;
    }

    int site_move() {
        const std::size_t i = draw_index(n_);
        const long double u = draw_u();
        const std::array<std::size_t, 1> sites{i};
        const std::array<long double, 1> values{x_[i] + u};
        const double dH = delta_energy(sites, values);
        if (!metropolis_accept(dH, rng_)) return 0;
        x_[i] = values[0];
        energy_ += dH;
        return 1;
    }

    SamplerConfig cfg_;
    ModelParams p_;
    std::size_t n_;
    bool ring_;
    double lambda_;
    std::mt19937_64 rng_;
    std::vector<long double> x_;
    double energy_ = 0.0;
    double step_ = 0.0;
    long long since_resync_ = 0;
    ChainDiagnostics diag_;
};

// ---------------------------------------------------------------------------
// Full run

namespace detail {

struct ReplicaOutput {
    LagMoments moments;
    std::vector<double> sums;
    ChainDiagnostics diag;
    std::string dump_file;
};

inline std::string dump_part_path(const std::string& base, int chain) {
    return base + ".part" + std::to_string(chain);
}

inline void run_replica(const SamplerConfig& cfg, int chain_id, ReplicaOutput& out) {
    const int n = cfg.params.n;
    const std::size_t recorded = static_cast<std::size_t>(cfg.sweeps / cfg.thin);
    const std::size_t batch_len = recorded / static_cast<std::size_t>(cfg.num_batches);
    out.moments = LagMoments(n, cfg.effective_max_lag(), cfg.ensemble.topology == Topology::ring,
                             batch_len, cfg.num_batches);
    std::ofstream dump;
    if (!cfg.dump_path.empty()) {
        out.dump_file = dump_part_path(cfg.dump_path, chain_id);
        dump.open(out.dump_file, std::ios::binary);
        if (!dump) throw Error("cannot open sample dump file " + out.dump_file);
        dump << std::setprecision(17);
    }
    MetropolisChain chain(cfg, chain_id);
    long long index = 0;
    chain.run([&](std::span<const double> x) {
        out.moments.add(x);
        if (cfg.record_sums) {
            long double s = 0.0L;
            for (double v : x) s += v;
            out.sums.push_back(static_cast<double>(s));
        }
        if (dump) {
            dump << chain_id << ',' << index;
            for (double v : x) dump << ',' << v;
            dump << '\n';
        }
        ++index;
    });
    out.diag = chain.diagnostics();
}

}  // namespace detail

/// Runs all replicas and merges them in chain-id order.
inline RunResult run(const SamplerConfig& cfg) {
    cfg.validate();
    std::vector<detail::ReplicaOutput> outs(static_cast<std::size_t>(cfg.chains));
    std::vector<std::exception_ptr> errors(outs.size());

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(outs.size(), cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw);
    // Static round-robin assignment keeps each replica's work independent of scheduling.
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < outs.size(); c += workers) {
                try {
                    detail::run_replica(cfg, static_cast<int>(c), outs[c]);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    RunResult r;
    r.n = cfg.params.n;
    r.ensemble = cfg.ensemble;
    r.moments = outs.front().moments;
    for (std::size_t c = 1; c < outs.size(); ++c) r.moments.append(outs[c].moments);

    long long moves = 0;
    double acc = 0.0;
    for (const auto& o : outs) {
        r.chains.push_back(o.diag);
        moves += o.diag.moves;
        acc += o.diag.acceptance_rate * static_cast<double>(o.diag.moves);
        r.max_sum_deviation = std::max(r.max_sum_deviation, o.diag.max_sum_deviation);
        r.max_energy_drift = std::max(r.max_energy_drift, o.diag.max_energy_drift);
        r.acceptance_flagged = r.acceptance_flagged || o.diag.acceptance_flagged;
        r.sum_series.insert(r.sum_series.end(), o.sums.begin(), o.sums.end());
    }
    r.acceptance_rate = moves ? acc / static_cast<double>(moves) : 0.0;
    r.mean_spacing = site_means(r.moments);
    r.lag_cov = lag_covariances(r.moments);
    r.lag_corr = lag_correlations(r.moments);
    r.ess_estimate = effective_sample_size(r.moments);

    if (!cfg.dump_path.empty()) {
        std::ofstream merged(cfg.dump_path, std::ios::binary);
        if (!merged) throw Error("cannot open sample dump file " + cfg.dump_path);
        merged << "chain,sample";
        for (int k = 1; k <= cfg.params.n; ++k) merged << ",x" << k;
        merged << '\n';
        for (const auto& o : outs) {
            std::ifstream part(o.dump_file, std::ios::binary);
            merged << part.rdbuf();
            part.close();
            std::remove(o.dump_file.c_str());
        }
    }
    return r;
}

}  // namespace coulomb
