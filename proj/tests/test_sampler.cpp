#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coulomb/energy.hpp"
#include "coulomb/sampler.hpp"

using namespace coulomb;

namespace {

SamplerConfig small_config(Topology t, bool constrained, int n = 16) {
    SamplerConfig c;
    c.params = {1.0, 1.0, n};
    c.ensemble = {t, constrained, constrained ? 0.0 : lambda_unbiased(c.params)};
    c.sweeps = 2000;
    c.burnin_sweeps = 200;
    c.seed = 99;
    c.max_lag = 3;
    return c;
}

}  // namespace

TEST(Proposals, PairTransfer) {
    const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
    EXPECT_EQ(propose_pair_transfer(x, 1, 0.0, Topology::chain), x);
    const auto y = propose_pair_transfer(x, 3, 0.05, Topology::ring);
    EXPECT_DOUBLE_EQ(y[3], 0.45);
    EXPECT_DOUBLE_EQ(y[0], 0.05);
    EXPECT_THROW(propose_pair_transfer(x, 3, 0.05, Topology::chain), DomainError);
    const auto z = propose_pair_transfer(x, 0, 2, 0.1);
    EXPECT_DOUBLE_EQ(z[0], 0.2);
    EXPECT_DOUBLE_EQ(z[2], 0.2);
    EXPECT_THROW(propose_pair_transfer(x, 1, 1, 0.1), DomainError);

    // a candidate with a nonpositive spacing is returned, and has infinite energy
    const auto w = propose_pair_transfer(x, 0, 0.25, Topology::chain);
    EXPECT_LE(w[1], 0.0);
}

TEST(Proposals, Site) {
    const std::vector<double> x{0.1, 0.9};
    EXPECT_EQ(propose_site(x, 0, 0.0), x);
    EXPECT_DOUBLE_EQ(propose_site(x, 1, 0.05)[1], 0.95);
    EXPECT_THROW(propose_site(x, 2, 0.1), DomainError);
}

TEST(Metropolis, Boundaries) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        EXPECT_TRUE(metropolis_accept(0.0, rng));
        EXPECT_TRUE(metropolis_accept(-3.0, rng));
        EXPECT_FALSE(metropolis_accept(INFINITY, rng));
        EXPECT_FALSE(metropolis_accept(NAN, rng));
    }
}

TEST(Metropolis, BernoulliFrequency) {
    std::mt19937_64 rng(2);
    const int trials = 100000;
    int acc = 0;
    for (int i = 0; i < trials; ++i) acc += metropolis_accept(std::log(2.0), rng);
    const double sigma = std::sqrt(0.25 / trials);
    EXPECT_NEAR(static_cast<double>(acc) / trials, 0.5, 3 * sigma);
}

TEST(Chain, IncrementalEnergyMatchesFullRecompute) {
    for (bool constrained : {true, false})
        for (Topology t : {Topology::chain, Topology::ring}) {
            SamplerConfig c = small_config(t, constrained, 11);
            MetropolisChain chain(c, 0);
            for (int i = 0; i < 2000; ++i) chain.move();
            std::vector<double> x(chain.state().begin(), chain.state().end());
            const double lambda = constrained ? 0.0 : c.ensemble.lambda;
            const double h0 = tilted_energy(x, c.params, lambda, t);
            EXPECT_NEAR(chain.full_energy(), h0, 1e-12 * h0);

            std::mt19937_64 rng(5);
            std::uniform_int_distribution<std::size_t> site(0, 10);
            std::uniform_real_distribution<double> u(-0.3, 0.3);
            for (int trial = 0; trial < 200; ++trial) {
                std::size_t i = site(rng), j = site(rng);
                if (i == j) j = (i + 1) % 11;
                const double du = u(rng) * x[i];
                std::vector<double> y = x;
                y[i] += du;
                if (constrained) y[j] -= du;
                const std::array<std::size_t, 2> sites{i, j};
                const std::array<long double, 2> vals{static_cast<long double>(y[i]), static_cast<long double>(y[j])};
                const std::size_t count = constrained ? 2 : 1;
                const double d = chain.delta_energy(std::span(sites).first(count), std::span(vals).first(count));
                bool valid = true;
                for (double v : y) valid = valid && v > 0.0 && (constrained || v <= 1.0);
                if (!valid) {
                    EXPECT_TRUE(std::isinf(d));
                    continue;
                }
                const double ref = tilted_energy(y, c.params, lambda, t) - h0;
                EXPECT_NEAR(d, ref, 1e-10 * std::abs(h0)) << trial;
            }
        }
}

TEST(Chain, OutOfDomainCandidatesRejected) {
    SamplerConfig c = small_config(Topology::ring, false, 8);
    MetropolisChain chain(c, 0);
    const std::array<std::size_t, 1> s{0};
    const std::array<long double, 1> over{1.0001L};
    EXPECT_TRUE(std::isinf(chain.delta_energy(s, over)));
    const std::array<long double, 1> neg{-0.1L};
    EXPECT_TRUE(std::isinf(chain.delta_energy(s, neg)));
}

TEST(Run, ConfigValidation) {
    SamplerConfig c = small_config(Topology::ring, true);
    c.sweeps = 0;
    EXPECT_THROW(run(c), DomainError);
    c = small_config(Topology::ring, true);
    c.thin = 0;
    EXPECT_THROW(run(c), DomainError);
    c = small_config(Topology::ring, false);
    c.ensemble.lambda = -1.0;
    EXPECT_THROW(run(c), DomainError);
    c = small_config(Topology::ring, true);
    c.chains = 0;
    EXPECT_THROW(run(c), DomainError);
}

TEST(Run, BitReproducibleAcrossThreadCounts) {
    SamplerConfig c = small_config(Topology::ring, true);
    c.chains = 3;
    c.threads = 1;
    const RunResult a = run(c);
    c.threads = 3;
    const RunResult b = run(c);
    ASSERT_EQ(a.lag_cov.size(), b.lag_cov.size());
    for (std::size_t i = 0; i < a.lag_cov.size(); ++i) {
        EXPECT_EQ(a.lag_cov[i].value, b.lag_cov[i].value);
        EXPECT_EQ(a.lag_cov[i].se, b.lag_cov[i].se);
    }
    for (std::size_t k = 0; k < a.mean_spacing.size(); ++k) EXPECT_EQ(a.mean_spacing[k].value, b.mean_spacing[k].value);
    EXPECT_EQ(a.acceptance_rate, b.acceptance_rate);
    EXPECT_NE(a.chains[0].stream_seed, a.chains[1].stream_seed);

    c.seed += 1;
    const RunResult d = run(c);
    EXPECT_NE(a.lag_cov[0].value, d.lag_cov[0].value);
}

TEST(Run, ConstraintAndBookkeepingInvariants) {
    for (Topology t : {Topology::chain, Topology::ring}) {
        SamplerConfig c = small_config(t, true, 40);
        c.sweeps = 5000;  // 2e5 moves, so at least one resync
        const RunResult r = run(c);
        EXPECT_LE(r.max_sum_deviation, 1e-12);
        EXPECT_LE(r.max_energy_drift, 1e-8);
        EXPECT_GT(r.acceptance_rate, 0.05);
        EXPECT_LT(r.acceptance_rate, 0.95);
        EXPECT_FALSE(r.acceptance_flagged);
        long double s = 0.0L;
        for (const auto& m : r.mean_spacing) s += m.value;
        EXPECT_NEAR(static_cast<double>(s), 1.0, 1e-12);
    }
}

TEST(Run, AdaptationTargetsAcceptanceBand) {
    SamplerConfig c = small_config(Topology::ring, false, 32);
    c.step_size = 1e-6;  // far too small to start with
    c.burnin_sweeps = 500;
    const RunResult r = run(c);
    EXPECT_GT(r.acceptance_rate, 0.25);
    EXPECT_LT(r.acceptance_rate, 0.45);
    EXPECT_GT(r.chains[0].final_step, 1e-4);
}

TEST(Run, ConstrainedRingMeanIsOneOverN) {
    SamplerConfig c = small_config(Topology::ring, true, 24);
    c.sweeps = 20000;
    const RunResult r = run(c);
    for (const auto& m : r.mean_spacing) EXPECT_NEAR(m.value, 1.0 / 24, 4.0 * m.se);
}

// gamma = 0 decouples the tilted ring into independent sites with density
// exp(-beta/x - lambda x) on (0, 1]; compare moments with quadrature.
TEST(Run, GammaZeroTiltedMatchesOneDimensionalQuadrature) {
    SamplerConfig c;
    c.params = {1.0, 0.0, 16};
    c.ensemble = {Topology::ring, false, lambda_unbiased(c.params)};
    c.sweeps = 40000;
    c.seed = 17;
    c.max_lag = 2;
    const RunResult r = run(c);

    const double lam = c.ensemble.lambda;
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto moment = [&](int k) {
        return Q::integrate([&](double x) { return std::pow(x, k) * std::exp(-1.0 / x - lam * x + 2.0 * std::sqrt(lam)); },
                            0.0, 1.0, 15, 1e-13);
    };
    const double z = moment(0), mean = moment(1) / z, var = moment(2) / z - mean * mean;

    double pooled = 0.0, pooled_se2 = 0.0;
    for (const auto& m : r.mean_spacing) {
        pooled += m.value / 16;
        pooled_se2 += m.se * m.se / (16.0 * 16.0);
    }
    // sites are independent, so the pooled se adds in quadrature
    EXPECT_NEAR(pooled, mean, 4.0 * std::sqrt(pooled_se2));
    EXPECT_NEAR(r.lag_cov[0].value, var, 4.0 * r.lag_cov[0].se);
    EXPECT_NEAR(r.lag_corr[1].value, 0.0, 4.0 * r.lag_corr[1].se);
    EXPECT_NEAR(r.lag_corr[2].value, 0.0, 4.0 * r.lag_corr[2].se);
}

TEST(Run, SampleDump) {
    const auto path = std::filesystem::temp_directory_path() / "coulomb_dump_test.csv";
    SamplerConfig c = small_config(Topology::chain, true, 5);
    c.sweeps = 100;
    c.thin = 5;
    c.chains = 2;
    c.num_batches = 4;
    c.dump_path = path.string();
    run(c);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "chain,sample,x1,x2,x3,x4,x5");
    int rows = 0;
    double first_sum = 0.0;
    while (std::getline(in, line)) {
        if (rows == 0) {
            std::stringstream ss(line);
            std::string cell;
            std::getline(ss, cell, ',');
            EXPECT_EQ(cell, "0");
            std::getline(ss, cell, ',');
            while (std::getline(ss, cell, ',')) first_sum += std::stod(cell);
        }
        ++rows;
    }
    EXPECT_EQ(rows, 2 * 20);
    EXPECT_NEAR(first_sum, 1.0, 1e-12);
    EXPECT_FALSE(std::filesystem::exists(path.string() + ".part0"));
    std::filesystem::remove(path);
}
