#pragma once

// Energy functionals of the Coulomb chain and ring in spacing coordinates:
//
//   E(x)  = sum_k beta / x_k + sum_{bonds (k,k+1)} gamma / (x_k + x_{k+1})
//   H(x)  = E(x) + lambda * sum_k x_k                       (tilted energy)
//
// The chain has bonds (1,2) ... (n-1,n); the ring adds the wrap bond (n,1).
// All functions are pure and safe to call concurrently.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "coulomb/model.hpp"

namespace coulomb {

/// Spacings below this are treated as a collapsed pair: energy is +infinity.
inline constexpr double kMinSpacing = 1e-300;

namespace detail {

inline void require_positive(std::span<const double> x) {
    for (double v : x)
        if (!(v > 0.0)) throw DomainError("spacings must be positive");
}

inline std::size_t bond_count(std::size_t n, Topology t) {
    return t == Topology::ring ? n : (n == 0 ? 0 : n - 1);
}

// Second site of bond k; the first site is k.
inline std::size_t bond_partner(std::size_t k, std::size_t n) { return k + 1 == n ? 0 : k + 1; }

inline double energy_unchecked(std::span<const double> x, const ModelParams& p, Topology t) {
    const std::size_t n = x.size();
    double site = 0.0;
    for (double v : x) {
        if (v < kMinSpacing) return std::numeric_limits<double>::infinity();
        site += 1.0 / v;
    }
    double bond = 0.0;
    if (p.gamma != 0.0) {
        const std::size_t nb = bond_count(n, t);
        for (std::size_t k = 0; k < nb; ++k) bond += 1.0 / (x[k] + x[bond_partner(k, n)]);
    }
    return p.beta * site + p.gamma * bond;
}

}  // namespace detail

/// Open-chain energy: sum beta/x_j + sum_{j>=2} gamma/(x_{j-1}+x_j).
inline double chain_energy(std::span<const double> x, const ModelParams& p) {
    detail::require_positive(x);
    return detail::energy_unchecked(x, p, Topology::chain);
}

/// Ring energy: chain energy plus the wrap term gamma/(x_1+x_n).
inline double circular_energy(std::span<const double> x, const ModelParams& p) {
    detail::require_positive(x);
    return detail::energy_unchecked(x, p, Topology::ring);
}

inline double energy(std::span<const double> x, const ModelParams& p, Topology t) {
    detail::require_positive(x);
    return detail::energy_unchecked(x, p, t);
}

inline double tilted_energy(std::span<const double> x, const ModelParams& p, double lambda,
                            Topology t) {
    const double e = energy(x, p, t);
    long double s = 0.0L;
    for (double v : x) s += v;
    return e + lambda * static_cast<double>(s);
}

inline double chain_energy(const SpacingConfig& c, const ModelParams& p) {
    return chain_energy(c.values(), p);
}
inline double circular_energy(const SpacingConfig& c, const ModelParams& p) {
    return circular_energy(c.values(), p);
}
inline double tilted_energy(const SpacingConfig& c, const ModelParams& p, double lambda,
                            Topology t) {
    return tilted_energy(c.values(), p, lambda, t);
}

/// Gradient of the tilted energy.
inline std::vector<double> gradient(std::span<const double> x, const ModelParams& p, double lambda,
                                    Topology t) {
    detail::require_positive(x);
    const std::size_t n = x.size();
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = lambda - p.beta / (x[k] * x[k]);
    if (p.gamma != 0.0) {
        const std::size_t nb = detail::bond_count(n, t);
        for (std::size_t k = 0; k < nb; ++k) {
            const std::size_t j = detail::bond_partner(k, n);
            const double s = x[k] + x[j];
            const double d = p.gamma / (s * s);
            g[k] -= d;
            g[j] -= d;
        }
    }
    return g;
}

/// Symmetric tridiagonal matrix, optionally with the two corner entries of a
/// cyclic band. off[k] couples rows k and k+1; in cyclic form off has n
/// entries and off[n-1] couples row n-1 with row 0.
struct BandedHessian {
    std::vector<double> diag;
    std::vector<double> off;
    bool cyclic = false;

    std::size_t size() const noexcept { return diag.size(); }

    double operator()(std::size_t i, std::size_t j) const {
        const std::size_t n = size();
        if (i == j) return diag[i];
        if (j + 1 == i) std::swap(i, j);
        if (i + 1 == j) return off[i];
        if (cyclic && ((i == 0 && j == n - 1) || (j == 0 && i == n - 1))) return off[n - 1];
        return 0.0;
    }

    /// Row-major n x n copy.
    std::vector<double> to_dense() const {
        const std::size_t n = size();
        std::vector<double> m(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] = diag[i];
        const std::size_t nb = cyclic ? n : n - 1;
        for (std::size_t k = 0; k < nb; ++k) {
            const std::size_t j = detail::bond_partner(k, n);
            m[k * n + j] += off[k];
            m[j * n + k] += off[k];
        }
        return m;
    }
};

/// Hessian of the tilted energy (lambda only shifts the gradient, so it is
/// accepted for symmetry with gradient()).
inline BandedHessian hessian(std::span<const double> x, const ModelParams& p,
                             [[maybe_unused]] double lambda, Topology t) {
    detail::require_positive(x);
    const std::size_t n = x.size();
    BandedHessian h;
    h.cyclic = t == Topology::ring;
    h.diag.resize(n);
    const std::size_t nb = detail::bond_count(n, t);
    h.off.assign(nb, 0.0);
    for (std::size_t k = 0; k < n; ++k) h.diag[k] = 2.0 * p.beta / (x[k] * x[k] * x[k]);
    for (std::size_t k = 0; k < nb; ++k) {
        const std::size_t j = detail::bond_partner(k, n);
        const double s = x[k] + x[j];
        const double d = 2.0 * p.gamma / (s * s * s);
        h.diag[k] += d;
        h.diag[j] += d;
        h.off[k] = d;
    }
    return h;
}

}  // namespace coulomb
