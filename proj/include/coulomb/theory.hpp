#pragma once

// Closed-form predictions for the ring and chain: the antiferromagnetic decay
// ratio delta, the boundary-layer rate eta, the uniform minimiser a(lambda),
// the unbiased Lagrange multiplier, and the leading-order covariances with
// and without the sum-constraint correction.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coulomb/circulant.hpp"
#include "coulomb/model.hpp"

namespace coulomb {

/// delta = gamma / (4 beta + gamma + 2 sqrt(4 beta^2 + 2 beta gamma)), in [0, 1).
inline double delta(const ModelParams& p) {
    if (!(p.beta > 0.0) || p.gamma < 0.0) throw DomainError("requires beta > 0, gamma >= 0");
    const double root = std::sqrt(4.0 * p.beta * p.beta + 2.0 * p.beta * p.gamma);
    return p.gamma / (4.0 * p.beta + p.gamma + 2.0 * root);
}

/// Linearisation of the boundary recursion of the chain stationarity system
/// around its fixed point (a, gamma / (4 a^2)):
///   [u, v]_{k+1} = A [u, v]_k,
///   A = [[-1, -4 a^3 / gamma], [-2 beta / a^3, -1 - 8 beta / gamma]].
/// det A = 1 for every a, so the eigenvalues are eta1 and 1 / eta1.
struct BoundaryMap {
    double a11, a12, a21, a22;
    double eta1;  ///< stable eigenvalue, in (-1, 0)
    double eta2;  ///< unstable eigenvalue, 1 / eta1

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }
};

inline BoundaryMap boundary_map(const ModelParams& p, double a) {
    if (!(p.beta > 0.0) || !(p.gamma > 0.0)) throw DomainError("requires beta > 0, gamma > 0");
    if (!(a > 0.0)) throw DomainError("a must be positive");
    const double a3 = a * a * a;
    BoundaryMap m{-1.0, -4.0 * a3 / p.gamma, -2.0 * p.beta / a3, -1.0 - 8.0 * p.beta / p.gamma,
                  0.0, 0.0};
    const double tr = m.trace();
    const double det = m.det();
    // Larger-magnitude root first, the other from the product of the roots.
    const double big = 0.5 * (tr - std::sqrt(tr * tr - 4.0 * det));
    m.eta2 = big;
    m.eta1 = det / big;
    return m;
}

/// Contraction rate |eta1| of the minimiser's boundary layer,
/// 1 + 4 beta/gamma - sqrt(16 (beta/gamma)^2 + 8 beta/gamma). Zero when
/// gamma = 0 (the equations decouple and the layer is absent).
inline double eta(const ModelParams& p) {
    if (!(p.beta > 0.0) || p.gamma < 0.0) throw DomainError("requires beta > 0, gamma >= 0");
    if (p.gamma == 0.0) return 0.0;
    return std::abs(boundary_map(p, 1.0).eta1);
}

/// Uniform minimiser of the tilted ring energy, sqrt((2 beta + gamma) / (2 lambda)).
inline double a_star(const ModelParams& p, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    return std::sqrt((2.0 * p.beta + p.gamma) / (2.0 * lambda));
}

/// lambda with n * a_star(lambda) = 1, i.e. (2 beta + gamma) n^2 / 2.
inline double lambda_unbiased(const ModelParams& p) {
    const double n = p.n;
    return 0.5 * (2.0 * p.beta + p.gamma) * n * n;
}

/// 1 / (2 beta + gamma (1 - delta) / 2) = 1 / sqrt(4 beta^2 + 2 beta gamma).
inline double variance_amplitude(const ModelParams& p) {
    return 1.0 / (2.0 * p.beta + 0.5 * p.gamma * (1.0 - delta(p)));
}

/// (1/n) (1 - delta) / (1 + delta): subtracted from every normalised lag
/// covariance once the spacings are conditioned to sum to one.
inline double conditional_correction(const ModelParams& p) {
    const double d = delta(p);
    return (1.0 - d) / (1.0 + d) / p.n;
}

struct CovPrediction {
    double variance_amplitude;
    double delta;
    double conditional_correction;
    int n;
};

inline CovPrediction predict(const ModelParams& p) {
    p.validate();
    return {variance_amplitude(p), delta(p), conditional_correction(p), p.n};
}

/// Leading-order Cov(x_j, x_{j+lag}) on the ring with sum one:
///   n^{-3} amp [(-delta)^lag - (conditional ? corr : 0)].
inline double predicted_cov(const ModelParams& p, int lag, bool conditional) {
    p.validate();
    if (lag < 0 || 2 * lag > p.n) throw DomainError("lag must lie in [0, n/2]");
    const double n = p.n;
    const double corr = conditional ? conditional_correction(p) : 0.0;
    return variance_amplitude(p) / (n * n * n) * (std::pow(-delta(p), lag) - corr);
}

/// Leading-order correlation Cov(lag) / Var.
inline double predicted_corr(const ModelParams& p, int lag, bool conditional) {
    return predicted_cov(p, lag, conditional) / predicted_cov(p, 0, conditional);
}

/// Var(sum_k X_k) on the tilted ring:
///   a^3 n amp (1 - delta) / (1 + delta),  a = a_star(lambda).
inline double predicted_var_of_sum(const ModelParams& p, double lambda) {
    const double a = a_star(p, lambda);
    const double d = delta(p);
    return a * a * a * p.n * variance_amplitude(p) * (1.0 - d) / (1.0 + d);
}

/// Normalised variance of the sum at the unbiased lambda as a function of
/// x = gamma / beta: Var = g(x) / (beta n^2). Decreasing, g(0) = 1/2.
inline double sum_variance_shape(double x) {
    if (x < 0.0) throw DomainError("x must be nonnegative");
    const double s = std::sqrt(4.0 + 2.0 * x);
    const double first = 2.0 / (4.0 + (4.0 * x + 2.0 * x * s) / (4.0 + x + 2.0 * s));
    return first * (2.0 + s) / (2.0 + x + s);
}

/// Hessian of the tilted ring energy at its uniform minimum a:
/// c = (2 beta + gamma/2) / a^3, b = gamma / (4 a^3).
inline SymTriCirculant ring_hessian(const ModelParams& p, double a) {
    const double a3 = a * a * a;
    return {(2.0 * p.beta + 0.5 * p.gamma) / a3, p.gamma / (4.0 * a3), p.n};
}

/// Multiplicative envelope [1/(1+e), 1+e], e = exp(-alpha min(j, n-k)), for
/// chain-vs-ring comparisons away from the ends.
struct EdgeEnvelope {
    double bound;
    double lower;
    double upper;
    bool informative;  ///< false next to an end, where the envelope is O(1)
};

inline EdgeEnvelope chain_edge_factor(const ModelParams& p, int j, int k, double alpha) {
    if (j < 1 || j > k || k > p.n) throw DomainError("requires 1 <= j <= k <= n");
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
    const int dist = std::min(j, p.n - k);
    const double e = std::exp(-alpha * dist);
    return {e, 1.0 / (1.0 + e), 1.0 + e, dist >= 2 && alpha * dist >= 2.0};
}

/// Decay constant alpha from a fitted geometric rate.
inline double edge_decay_constant(double rate) {
    if (!(rate > 0.0 && rate < 1.0)) throw DomainError("rate must lie in (0, 1)");
    return -std::log(rate);
}

}  // namespace coulomb
