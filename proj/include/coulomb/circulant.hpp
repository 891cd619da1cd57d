#pragma once

// Symmetric tridiagonal Toeplitz matrices D_n (diagonal c, off-diagonal b)
// and their cyclic closure M_n, which adds the corner entries b.
//
// The determinant D_n follows the three-term recurrence
//     D_n = c D_{n-1} - b^2 D_{n-2},   D_0 = 1, D_1 = c,
// whose characteristic roots are x1,2 = (c +- sqrt(c^2 - 4b^2)) / 2. The
// cyclic determinant and the first row of M_n^{-1} are expressed through D_k.
// Large n is handled by carrying e_k = D_k / x1^k, which stays bounded.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "coulomb/model.hpp"

namespace coulomb {

struct SymTriToeplitz {
    double c = 2.0;
    double b = 0.0;
    int n = 1;

    void validate() const {
        if (n < 1) throw DomainError("toeplitz size must be at least 1");
        if (!(c > 2.0 * std::abs(b))) throw DomainError("requires c > 2|b|");
    }
};

struct SymTriCirculant {
    double c = 2.0;
    double b = 0.0;
    int n = 4;

    void validate() const {
        if (n < 4) throw DomainError("circulant size must be at least 4");
        if (!(c > 2.0 * std::abs(b))) throw DomainError("requires c > 2|b|");
    }
};

/// Roots of x^2 - c x + b^2 = 0, x1 >= x2 >= 0.
struct CharacteristicRoots {
    double x1;
    double x2;
};

inline CharacteristicRoots characteristic_roots(double c, double b) {
    const double disc = std::sqrt(c * c - 4.0 * b * b);
    const double x1 = 0.5 * (c + disc);
    // x1 * x2 = b^2 avoids cancellation in c - disc.
    return {x1, b * b / x1};
}

namespace detail {

inline long double ipow(long double base, long long e) {
    long double r = 1.0L;
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

// e_k = D_k / x1^k for k = 0..n.
inline std::vector<long double> scaled_toeplitz_dets(double c, double b, int n) {
    const auto [x1, x2] = characteristic_roots(c, b);
    const long double s = static_cast<long double>(c) / x1;
    const long double q = static_cast<long double>(x2) / x1;
    std::vector<long double> e(static_cast<std::size_t>(n) + 1);
    e[0] = 1.0L;
    if (n >= 1) e[1] = s;
    for (int k = 2; k <= n; ++k) e[k] = s * e[k - 1] - q * e[k - 2];
    return e;
}

}  // namespace detail

/// nu_j = c + 2b cos(pi j / (n+1)), j = 1..n.
inline std::vector<double> toeplitz_eigenvalues(const SymTriToeplitz& m) {
    m.validate();
    std::vector<double> nu(static_cast<std::size_t>(m.n));
    for (int j = 1; j <= m.n; ++j)
        nu[j - 1] = m.c + 2.0 * m.b * std::cos(std::numbers::pi * j / (m.n + 1));
    return nu;
}

/// nu_j = c + 2b cos(2 pi j / n), j = 1..n.
inline std::vector<double> circulant_eigenvalues(const SymTriCirculant& m) {
    m.validate();
    std::vector<double> nu(static_cast<std::size_t>(m.n));
    for (int j = 1; j <= m.n; ++j)
        nu[j - 1] = m.c + 2.0 * m.b * std::cos(2.0 * std::numbers::pi * j / m.n);
    return nu;
}

/// D_0..D_n by forward recurrence in extended precision.
inline std::vector<long double> toeplitz_det_sequence(double c, double b, int n) {
    std::vector<long double> d(static_cast<std::size_t>(std::max(n, 1)) + 1);
    const long double cl = c;
    const long double b2 = static_cast<long double>(b) * b;
    d[0] = 1.0L;
    d[1] = cl;
    for (int k = 2; k <= n; ++k) d[k] = cl * d[k - 1] - b2 * d[k - 2];
    return d;
}

/// det D_n via the recurrence. Overflows to infinity once D_n exceeds the
/// long double range; use log_toeplitz_det for such n.
inline double toeplitz_det(const SymTriToeplitz& m) {
    m.validate();
    return static_cast<double>(toeplitz_det_sequence(m.c, m.b, m.n)[m.n]);
}

/// Closed form D_n = A x1^n + B x2^n = (x1^{n+1} - x2^{n+1}) / (x1 - x2).
inline double toeplitz_det_closed_form(const SymTriToeplitz& m) {
    m.validate();
    const auto [x1, x2] = characteristic_roots(m.c, m.b);
    const long double a = static_cast<long double>(x1) / (x1 - x2);
    const long double bb = -static_cast<long double>(x2) / (x1 - x2);
    return static_cast<double>(a * detail::ipow(x1, m.n) + bb * detail::ipow(x2, m.n));
}

/// log D_n from the scaled recurrence; finite for any n.
inline double log_toeplitz_det(const SymTriToeplitz& m) {
    m.validate();
    const auto x1 = characteristic_roots(m.c, m.b).x1;
    const auto e = detail::scaled_toeplitz_dets(m.c, m.b, m.n);
    return m.n * std::log(x1) + static_cast<double>(std::log(e[m.n]));
}

/// det M_n = D_n - b^2 D_{n-2} - 2 (-1)^n b^n.
inline double circulant_det(const SymTriCirculant& m) {
    m.validate();
    const auto d = toeplitz_det_sequence(m.c, m.b, m.n);
    const long double bn = detail::ipow(m.b, m.n);
    const long double sign = (m.n % 2 == 0) ? 1.0L : -1.0L;
    const long double b2 = static_cast<long double>(m.b) * m.b;
    return static_cast<double>(d[m.n] - b2 * d[m.n - 2] - 2.0L * sign * bn);
}

/// First row Lambda_{1k}, k = 1..n, of M_n^{-1}. The full inverse is the
/// circulant generated by this row.
///
/// With D_0 = 1:
///   Lambda_11 = D_{n-1} / det
///   Lambda_1k = (-1)^{k+1} (b^{k-1} D_{n-k} + (-1)^n b^{n-k+1} D_{k-2}) / det
/// for 2 <= k <= n, where k = 2 and k = n reduce to (-b D_{n-2} + (-b)^{n-1})/det.
/// Evaluated on e_k = D_k / x1^k and r = b / x1 so n up to 1e6 is safe.
inline std::vector<double> circulant_inverse_row(const SymTriCirculant& m) {
    m.validate();
    const int n = m.n;
    const auto x1 = static_cast<long double>(characteristic_roots(m.c, m.b).x1);
    const long double r = m.b / x1;
    const auto e = detail::scaled_toeplitz_dets(m.c, m.b, n);
    const long double parity = (n % 2 == 0) ? 1.0L : -1.0L;
    // det / x1^n = e_n - r^2 e_{n-2} - 2 (-1)^n r^n
    const long double scaled_det = e[n] - r * r * e[n - 2] - 2.0L * parity * detail::ipow(r, n);
    if (!(std::abs(scaled_det) > 0.0L) || !std::isfinite(static_cast<double>(scaled_det)))
        throw DomainError("circulant matrix is singular");

    std::vector<double> row(static_cast<std::size_t>(n));
    const long double denom = x1 * scaled_det;
    row[0] = static_cast<double>(e[n - 1] / denom);
    long double head = 1.0L;  // (-r)^{k-1}
    for (int k = 2; k <= n; ++k) {
        head *= -r;
        // (-1)^{k+1} (-1)^n r^{n-k+1} e_{k-2}
        const long double tail_sign = ((k + 1 + n) % 2 == 0) ? 1.0L : -1.0L;
        const long double tail = tail_sign * detail::ipow(r, n - k + 1) * e[k - 2];
        row[k - 1] = static_cast<double>((head * e[n - k] + tail) / denom);
    }
    return row;
}

/// n -> infinity limits of the inverse row.
struct InverseAsymptotic {
    double lambda11;  ///< 1 / (c - 2 b^2 / x1) = 1 / sqrt(c^2 - 4 b^2)
    double ratio;     ///< b / x1; Lambda_1k ~ (-ratio)^{k-1} lambda11
};

inline InverseAsymptotic inverse_row_asymptotic(const SymTriCirculant& m) {
    if (!(m.c > 2.0 * std::abs(m.b))) throw DomainError("requires c > 2|b|");
    const double x1 = characteristic_roots(m.c, m.b).x1;
    return {1.0 / (m.c - 2.0 * m.b * m.b / x1), m.b / x1};
}

/// Asymptotic first row, (-ratio)^{d} lambda11 with d the cyclic distance
/// min(k-1, n-k+1) from the diagonal.
inline std::vector<double> asymptotic_inverse_row(const SymTriCirculant& m) {
    m.validate();
    const auto [l11, ratio] = inverse_row_asymptotic(m);
    std::vector<double> row(static_cast<std::size_t>(m.n));
    for (int k = 1; k <= m.n; ++k) {
        const int d = std::min(k - 1, m.n - k + 1);
        row[k - 1] = l11 * static_cast<double>(detail::ipow(-ratio, d));
    }
    return row;
}

}  // namespace coulomb
