#pragma once

// Deterministic minimisation of the tilted energies.
//
// The ring minimum is the constant profile a_star(lambda). The chain minimum
// solves the stationarity system whose first and last rows carry the
// boundary conditions; it is found by damped Newton iteration with a
// tridiagonal (Thomas) solve per step. Away from the ends the chain profile
// relaxes to a_star geometrically, at rate eta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "coulomb/energy.hpp"
#include "coulomb/model.hpp"
#include "coulomb/theory.hpp"

namespace coulomb {

struct MinProfile {
    std::vector<double> a_vec;
    double lambda = 0.0;
    double residual_norm = 0.0;  ///< max-abs gradient at a_vec
    int iterations = 0;
    std::vector<double> residual_history;  ///< residual before each Newton step, then final
};

struct NewtonOptions {
    int max_iter = 200;
    double rel_tol = 1e-12;  ///< converged when residual <= rel_tol * lambda
};

/// Solves the symmetric tridiagonal system T x = rhs, where T has diagonal
/// `diag` and off-diagonal `off` (off[k] couples k and k+1).
inline std::vector<double> solve_tridiagonal(std::span<const double> diag,
                                             std::span<const double> off,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (rhs.size() != n || off.size() + 1 < n) throw DomainError("tridiagonal size mismatch");
    std::vector<double> c(n), d(n);
    double denom = diag[0];
    if (denom == 0.0) throw DomainError("singular tridiagonal system");
    c[0] = n > 1 ? off[0] / denom : 0.0;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if (denom == 0.0) throw DomainError("singular tridiagonal system");
        c[i] = i + 1 < n ? off[i] / denom : 0.0;
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    std::vector<double> x(n);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

namespace detail {

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

inline MinProfile minimize_circular(const ModelParams& p, double lambda) {
    p.validate();
    const double a = a_star(p, lambda);
    MinProfile out;
    out.a_vec.assign(static_cast<std::size_t>(p.n), a);
    out.lambda = lambda;
    out.residual_norm = detail::max_abs(gradient(out.a_vec, p, lambda, Topology::ring));
    out.residual_history = {out.residual_norm};
    return out;
}

/// Newton iteration on the chain stationarity system, started from the
/// constant a_star profile. Steps are halved until every component stays
/// above a tenth of the current smallest component.
inline MinProfile minimize_chain(const ModelParams& p, double lambda,
                                 const NewtonOptions& opt = {}) {
    p.validate();
    MinProfile out;
    out.lambda = lambda;
    std::vector<double> x(static_cast<std::size_t>(p.n), a_star(p, lambda));
    const double tol = opt.rel_tol * lambda;

    std::vector<double> g = gradient(x, p, lambda, Topology::chain);
    double res = detail::max_abs(g);
    int it = 0;
    while (res > tol) {
        if (it >= opt.max_iter)
            throw ConvergenceError("chain minimisation did not converge in " +
                                       std::to_string(opt.max_iter) + " iterations",
                                   res);
        out.residual_history.push_back(res);
        const BandedHessian h = hessian(x, p, lambda, Topology::chain);
        for (double& v : g) v = -v;
        const std::vector<double> step = solve_tridiagonal(h.diag, h.off, g);

        const double floor = 0.1 * *std::min_element(x.begin(), x.end());
        double t = 1.0;
        for (int halvings = 0;; ++halvings) {
            bool ok = true;
            for (std::size_t k = 0; k < x.size() && ok; ++k) ok = x[k] + t * step[k] >= floor;
            if (ok) break;
            if (halvings > 60) throw ConvergenceError("step damping failed", res);
            t *= 0.5;
        }
        for (std::size_t k = 0; k < x.size(); ++k) x[k] += t * step[k];

        g = gradient(x, p, lambda, Topology::chain);
        res = detail::max_abs(g);
        ++it;
    }
    out.residual_history.push_back(res);
    out.a_vec = std::move(x);
    out.residual_norm = res;
    out.iterations = it;
    return out;
}

inline MinProfile minimize(const ModelParams& p, double lambda, Topology t) {
    return t == Topology::ring ? minimize_circular(p, lambda) : minimize_chain(p, lambda);
}

/// Geometric fit of the boundary layer |a_k - a|, k = 3 .. k_max (1-based).
struct DecayFit {
    double rate = 0.0;  ///< exp(slope) of log|a_k - a| against k
    double r2 = 0.0;
    int first_k = 0;
    int last_k = 0;
    int points = 0;
    /// The layer vanished within the first sites (|a_k - a| <= 1e-10 a for
    /// k > 3); rate is reported as 0 and r2 as NaN.
    bool immediate_decay = false;
};

inline DecayFit boundary_decay_fit(const MinProfile& profile, const ModelParams& p) {
    if (!(p.gamma > 0.0)) throw DomainError("boundary decay fit requires gamma > 0");
    const double a = a_star(p, profile.lambda);
    const int n = static_cast<int>(profile.a_vec.size());
    const double floor = 1e-13 * a;
    auto dev = [&](int k) { return std::abs(profile.a_vec[static_cast<std::size_t>(k - 1)] - a); };

    DecayFit fit;
    fit.first_k = 3;
    int k = 3;
    while (k <= n / 2 && dev(k) > floor) ++k;
    fit.last_k = k - 1;
    fit.points = std::max(0, fit.last_k - fit.first_k + 1);

    if (fit.points < 4) {
        double tail = 0.0;
        for (int j = 4; j <= n / 2; ++j) tail = std::max(tail, dev(j));
        if (tail <= 1e-10 * a) {
            fit.immediate_decay = true;
            fit.rate = 0.0;
            fit.r2 = std::numeric_limits<double>::quiet_NaN();
            return fit;
        }
        throw DomainError("fewer than 4 usable points for the boundary decay fit");
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int j = fit.first_k; j <= fit.last_k; ++j) {
        const double y = std::log(dev(j));
        sx += j;
        sy += y;
        sxx += double(j) * j;
        sxy += j * y;
        syy += y * y;
    }
    const double m = fit.points;
    const double cxx = sxx - sx * sx / m;
    const double cxy = sxy - sx * sy / m;
    const double cyy = syy - sy * sy / m;
    const double slope = cxy / cxx;
    fit.rate = std::exp(slope);
    fit.r2 = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
    return fit;
}

/// lambda for which the minimiser's total length sum_k a_k(lambda) equals one.
///
/// The ring and the gamma = 0 chain invert in closed form to
/// (2 beta + gamma) n^2 / 2. Otherwise the chain is solved by bisection over
/// [lambda0 / 4, 4 lambda0], valid because the total length is strictly
/// decreasing in lambda.
inline double calibrate_lambda(const ModelParams& p, Topology t = Topology::chain,
                               double tol = 1e-10) {
    p.validate();
    const double lambda0 = lambda_unbiased(p);
    if (t == Topology::ring || p.gamma == 0.0) return lambda0;

    auto excess = [&](double lam) {
        const MinProfile prof = minimize_chain(p, lam);
        long double s = 0.0L;
        for (double v : prof.a_vec) s += v;
        return static_cast<double>(s) - 1.0;
    };
    double lo = 0.25 * lambda0;
    double hi = 4.0 * lambda0;
    double flo = excess(lo);
    double fhi = excess(hi);
    if (!(flo > 0.0 && fhi < 0.0)) throw DomainError("lambda calibration bracket failed");
    for (int it = 0; it < 200; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double fm = excess(mid);
        if (std::abs(fm) <= tol) return mid;
        if (fm > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return mid;
    }
    throw ConvergenceError("lambda calibration did not converge", hi - lo);
}

}  // namespace coulomb
