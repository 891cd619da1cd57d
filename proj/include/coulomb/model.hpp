#pragma once

// Model parameters, spacing configurations and the error types shared by
// every module.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coulomb {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or a point outside the domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Chain (two open ends) or ring (wrap-around next-nearest term).
enum class Topology { chain, ring };

inline const char* to_string(Topology t) { return t == Topology::ring ? "ring" : "chain"; }

/// Couplings of the nearest (beta) and next-nearest (gamma) 1/r terms and the
/// number of spacings n.
struct ModelParams {
    double beta = 1.0;
    double gamma = 1.0;
    int n = 64;

    /// Throws DomainError unless beta > 0, 0 <= gamma <= beta and n >= 3.
    void validate() const {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw DomainError("beta must be positive and finite");
        if (!(gamma >= 0.0) || !std::isfinite(gamma))
            throw DomainError("gamma must be nonnegative and finite");
        if (gamma > beta)
            throw DomainError("gamma must not exceed beta");
        if (n < 3)
            throw DomainError("n must be at least 3");
    }
};

/// A length-n sequence of positive spacings x_k = y_k - y_{k-1}.
///
/// Constrained configurations sum to one (the particles fill the unit
/// interval or ring); unconstrained ones live in (0, 1]^n.
class SpacingConfig {
public:
    static constexpr double kSumTolerance = 1e-12;

    SpacingConfig() = default;

    SpacingConfig(std::vector<double> x, bool constrained)
        : x_(std::move(x)), constrained_(constrained) {
        validate();
    }

    /// Evenly spaced configuration x_k = 1/n (satisfies both ensembles).
    static SpacingConfig uniform(int n, bool constrained = true) {
        if (n < 1) throw DomainError("n must be positive");
        return SpacingConfig(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n),
                             constrained);
    }

    void validate() const {
        for (double v : x_) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError("spacings must be positive and finite");
            if (!constrained_ && v > 1.0)
                throw DomainError("unconstrained spacings must lie in (0, 1]");
        }
        if (constrained_ && std::abs(sum() - 1.0) > kSumTolerance)
            throw DomainError("constrained spacings must sum to one");
    }

    std::span<const double> values() const noexcept { return x_; }
    std::size_t size() const noexcept { return x_.size(); }
    double operator[](std::size_t k) const { return x_[k]; }
    bool constrained() const noexcept { return constrained_; }

    double sum() const {
        long double s = 0.0L;
        for (double v : x_) s += v;
        return static_cast<double>(s);
    }

    /// Particle positions y_0 = 0, y_k = x_1 + ... + x_k.
    std::vector<double> positions() const {
        std::vector<double> y(x_.size() + 1, 0.0);
        long double acc = 0.0L;
        for (std::size_t k = 0; k < x_.size(); ++k) {
            acc += x_[k];
            y[k + 1] = static_cast<double>(acc);
        }
        return y;
    }

private:
    std::vector<double> x_;
    bool constrained_ = true;
};

}  // namespace coulomb
