#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "coulomb/circulant.hpp"

using namespace coulomb;

namespace {

Eigen::MatrixXd dense_toeplitz(double c, double b, int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = c;
        if (i + 1 < n) m(i, i + 1) = m(i + 1, i) = b;
    }
    return m;
}

Eigen::MatrixXd dense_circulant(double c, double b, int n) {
    Eigen::MatrixXd m = dense_toeplitz(c, b, n);
    m(0, n - 1) += b;
    m(n - 1, 0) += b;
    return m;
}

const std::vector<std::pair<double, double>> kGrid{
    {2.0, 0.5}, {2.0, -0.5}, {1.0, 0.0}, {3.0, 1.4}, {1.0, -0.49}, {5.0, 0.3}};

}  // namespace

TEST(Toeplitz, Eigenvalues) {
    const auto one = toeplitz_eigenvalues({3.5, 0.7, 1});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_NEAR(one[0], 3.5, 1e-15);

    const auto ev = toeplitz_eigenvalues({2.0, 0.5, 3});
    EXPECT_NEAR(ev[0], 2.0 + std::cos(M_PI / 4), 1e-14);
    EXPECT_NEAR(ev[1], 2.0, 1e-14);
    EXPECT_NEAR(ev[2], 2.0 - std::cos(M_PI / 4), 1e-14);

    for (auto [c, b] : kGrid)
        for (int n = 1; n <= 64; n *= 2) {
            long double prod = 1.0L;
            for (double v : toeplitz_eigenvalues({c, b, n})) prod *= v;
            const double det = toeplitz_det({c, b, n});
            EXPECT_NEAR(static_cast<double>(prod) / det, 1.0, 1e-10) << c << " " << b << " " << n;
        }
}

TEST(Circulant, Eigenvalues) {
    const auto ev = circulant_eigenvalues({2.5, 0.25, 4});
    EXPECT_NEAR(ev[0], 2.5, 1e-15);
    EXPECT_NEAR(ev[1], 2.0, 1e-15);
    EXPECT_NEAR(ev[2], 2.5, 1e-15);
    EXPECT_NEAR(ev[3], 3.0, 1e-15);
    for (double v : circulant_eigenvalues({2.0, 0.7, 13})) {
        EXPECT_GE(v, 2.0 - 1.4 - 1e-14);
        EXPECT_LE(v, 2.0 + 1.4 + 1e-14);
    }
    for (double v : circulant_eigenvalues({1.7, 0.0, 9})) EXPECT_EQ(v, 1.7);

    // against the dense symmetric eigensolver
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_circulant(3.0, 1.2, 10));
    auto ours = circulant_eigenvalues({3.0, 1.2, 10});
    std::sort(ours.begin(), ours.end());
    for (int i = 0; i < 10; ++i) EXPECT_NEAR(ours[i], es.eigenvalues()(i), 1e-12);
}

TEST(Toeplitz, DeterminantSmallCases) {
    const auto d = toeplitz_det_sequence(2.0, 0.5, 3);
    EXPECT_EQ(d[0], 1.0L);
    EXPECT_DOUBLE_EQ(static_cast<double>(d[1]), 2.0);
    EXPECT_DOUBLE_EQ(static_cast<double>(d[2]), 4.0 - 0.25);
    EXPECT_DOUBLE_EQ(toeplitz_det({2.0, 0.5, 3}), 7.0);
}

TEST(Toeplitz, RecurrenceClosedFormAndDenseAgree) {
    for (auto [c, b] : kGrid)
        for (int n = 1; n <= 12; ++n) {
            const double rec = toeplitz_det({c, b, n});
            const double closed = toeplitz_det_closed_form({c, b, n});
            const double dense = dense_toeplitz(c, b, n).determinant();
            EXPECT_NEAR(rec / dense, 1.0, 1e-10);
            EXPECT_NEAR(closed / dense, 1.0, 1e-10);
        }
}

TEST(Toeplitz, LogDeterminantForLargeN) {
    for (auto [c, b] : kGrid) {
        const SymTriToeplitz m{c, b, 300};
        EXPECT_NEAR(log_toeplitz_det(m), std::log(toeplitz_det(m)), 1e-10 * std::abs(std::log(toeplitz_det(m))) + 1e-12);
    }
    // far beyond the double range, the scaled recurrence stays finite
    const double big = log_toeplitz_det({4.0, 1.0, 100000});
    EXPECT_TRUE(std::isfinite(big));
    EXPECT_GT(big, 100000 * std::log(3.0));
}

TEST(Circulant, Determinant) {
    EXPECT_NEAR(circulant_det({2.0, 0.5, 4}), 12.0, 1e-12);
    // c^4 - 4 c^2 b^2
    EXPECT_NEAR(circulant_det({3.0, 0.7, 4}), 81.0 - 4 * 9 * 0.49, 1e-11);
    EXPECT_NEAR(circulant_det({1.5, 0.0, 7}), std::pow(1.5, 7), 1e-12);
    for (auto [c, b] : kGrid)
        for (int n = 4; n <= 12; ++n) {
            const double dense = dense_circulant(c, b, n).determinant();
            EXPECT_NEAR(circulant_det({c, b, n}) / dense, 1.0, 1e-10) << c << " " << b << " " << n;
        }
}

TEST(Circulant, InverseRowExample) {
    const auto row = circulant_inverse_row({2.0, 0.5, 4});
    EXPECT_NEAR(row[0], 7.0 / 12.0, 1e-14);
    const auto diag = circulant_inverse_row({4.0, 0.0, 6});
    EXPECT_NEAR(diag[0], 0.25, 1e-16);
    for (std::size_t k = 1; k < diag.size(); ++k) EXPECT_EQ(diag[k], 0.0);
}

TEST(Circulant, InverseRowAgainstDenseInverseBothParities) {
    for (auto [c, b] : kGrid)
        for (int n = 4; n <= 40; ++n) {
            const auto row = circulant_inverse_row({c, b, n});
            const Eigen::MatrixXd inv = dense_circulant(c, b, n).inverse();
            for (int k = 0; k < n; ++k) EXPECT_NEAR(row[k], inv(0, k), 1e-12) << c << " " << b << " n=" << n << " k=" << k;
        }
}

TEST(Circulant, InverseRowSymmetryAndIdentity) {
    for (int n : {4, 8, 16, 32, 64}) {
        const double c = 2.2, b = 0.9;
        const auto row = circulant_inverse_row({c, b, n});
        for (int k = 2; k <= n; ++k) EXPECT_NEAR(row[k - 1], row[n - k + 1], 1e-14);
        Eigen::MatrixXd inv(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) inv(i, j) = row[(j - i + n) % n];
        const double err = (dense_circulant(c, b, n) * inv - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
        EXPECT_LE(err, 1e-9);
    }
}

TEST(Circulant, InverseRowSignAlternation) {
    const auto row = circulant_inverse_row({2.0, 0.5, 60});
    for (int k = 1; k < 30; ++k) {
        if (std::abs(row[k]) < 1e-13 * row[0]) break;
        EXPECT_LT(row[k] * row[k - 1], 0.0) << k;
    }
}

TEST(Circulant, InverseRowHugeN) {
    const auto row = circulant_inverse_row({2.0, 0.5, 1000000});
    const auto asym = inverse_row_asymptotic({2.0, 0.5, 4});
    EXPECT_NEAR(row[0], asym.lambda11, 1e-14);
    EXPECT_NEAR(row[1], -asym.ratio * asym.lambda11, 1e-14);
}

TEST(Circulant, SingularAndInvalid) {
    EXPECT_THROW(circulant_inverse_row({1.0, 0.5, 6}), DomainError);  // c = 2|b|
    EXPECT_THROW(circulant_inverse_row({2.0, 0.5, 3}), DomainError);
    EXPECT_THROW(toeplitz_det({2.0, 0.5, 0}), DomainError);
}

TEST(Circulant, AsymptoticValues) {
    const auto a = inverse_row_asymptotic({2.0, 0.5, 4});
    const double x1 = (2.0 + std::sqrt(3.0)) / 2.0;
    EXPECT_NEAR(a.ratio, 0.5 / x1, 1e-15);
    EXPECT_NEAR(a.ratio, 0.2679491924311227, 1e-12);
    EXPECT_NEAR(a.lambda11, 1.0 / std::sqrt(3.0), 1e-14);

    const auto z = inverse_row_asymptotic({3.0, 1e-12, 4});
    EXPECT_NEAR(z.lambda11, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(z.ratio, 0.0, 1e-12);
}

// The exact row approaches the limit geometrically in n, with base
// max(b/x1, x2/x1), at a fixed offset k and over cyclic distance.
TEST(Circulant, ConvergenceToAsymptoticRow) {
    for (auto [c, b] : {std::pair{2.0, 0.5}, std::pair{1.0, -0.45}, std::pair{3.0, 1.2}}) {
        const auto roots = characteristic_roots(c, b);
        const double base = std::max(std::abs(b) / roots.x1, roots.x2 / roots.x1);
        const auto asym = inverse_row_asymptotic({c, b, 4});
        std::vector<double> ns, logs;
        for (int n = 6; n <= 120; n += 2) {
            const auto exact = circulant_inverse_row({c, b, n});
            const auto approx = asymptotic_inverse_row({c, b, n});
            double worst = 0.0;
            for (int k = 0; k < n; ++k) worst = std::max(worst, std::abs(exact[k] - approx[k]));
            if (worst < 1e-13 * asym.lambda11) break;
            ns.push_back(n);
            logs.push_back(std::log(worst));
        }
        ASSERT_GE(ns.size(), 4u);
        // the worst entry sits at the antipode, distance n/2, so the error
        // shrinks like base^(n/2) per unit of n
        const double slope = (logs.back() - logs.front()) / (ns.back() - ns.front());
        EXPECT_LE(std::exp(2.0 * slope), base + 0.02) << c << " " << b;
    }
}
