#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "llc/numerics/parallel.hpp"
#include "llc/numerics/rng.hpp"
#include "llc/numerics/stats.hpp"

using namespace llc;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, DerivedStreamsDependOnlyOnSeedAndIndex) {
    Rng a(7);
    a.normal();  // advancing the parent must not change its children
    Rng b(7);
    EXPECT_EQ(a.derive(3).uniform(0, 1), b.derive(3).uniform(0, 1));
    EXPECT_NE(b.derive(3).seed(), b.derive(4).seed());
}

TEST(Rng, UniformIntCoversClosedRange) {
    Rng r(1);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) seen.insert(r.uniform_int(2, 5));
    EXPECT_EQ(seen, (std::set<std::int64_t>{2, 3, 4, 5}));
    EXPECT_THROW(r.uniform_int(3, 2), std::invalid_argument);
}

TEST(Rng, GaussianMoments) {
    Rng r(5);
    const auto v = gaussian_vector(r, 200000, 4.0);
    const auto ms = mean_and_stderr(v);
    EXPECT_NEAR(ms.mean, 0.0, 0.02);
    double ss = 0.0;
    for (double x : v) ss += x * x;
    EXPECT_NEAR(ss / static_cast<double>(v.size()), 4.0, 0.05);
}

TEST(Stats, MeanAndStderr) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto ms = mean_and_stderr(v);
    EXPECT_DOUBLE_EQ(ms.mean, 2.5);
    // sample sd = sqrt(5/3), stderr = sd / 2
    EXPECT_NEAR(ms.std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
}

TEST(Stats, QuantileInterpolates) {
    std::vector<double> v{5, 1, 3, 2, 4};
    EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile(v, 1.0), 5.0);
    EXPECT_DOUBLE_EQ(quantile(v, 0.9), 4.6);
}

TEST(Stats, SpearmanMatchesPearsonOfRanks) {
    const std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2, 1, 4, 3, 6, 5};
    // d_i = rank differences: 1,1,1,1,1,1 -> rho = 1 - 6*6/(6*35) = 29/35
    EXPECT_NEAR(spearman(x, y), 29.0 / 35.0, 1e-12);
    const std::vector<double> z{6, 5, 4, 3, 2, 1};
    EXPECT_NEAR(spearman(x, z), -1.0, 1e-12);
}

TEST(Stats, RanksAverageTies) {
    const std::vector<double> v{10, 20, 20, 30};
    const auto r = detail::ranks(v);
    EXPECT_DOUBLE_EQ(r[1], r[2]);
    EXPECT_DOUBLE_EQ(r[0] + 1.5, r[1]);
}

TEST(Stats, ScalingFitRecoversExponentAndMultiplicity) {
    std::vector<double> eps, vol1, vol2;
    for (int k = 0; k < 13; ++k) {
        const double e = 0.1 * std::pow(2.0, -k);
        eps.push_back(e);
        vol1.push_back(3.0 * std::pow(e, 0.75));
        vol2.push_back(2.0 * std::pow(e, 0.5) * (-std::log(e)));
    }
    const auto f1 = fit_scaling_law(eps, vol1);
    EXPECT_NEAR(f1.lambda, 0.75, 1e-9);
    EXPECT_EQ(f1.multiplicity, 1);
    EXPECT_NEAR(f1.c, 3.0, 1e-8);
    const auto f2 = fit_scaling_law(eps, vol2);
    EXPECT_NEAR(f2.lambda, 0.5, 1e-9);
    EXPECT_EQ(f2.multiplicity, 2);
}

TEST(Stats, ScalingFitRejectsBadInput) {
    const std::vector<double> e{0.1, 0.05, 0.025}, v{1, 1, 1};
    EXPECT_THROW(fit_scaling_law(e, v), std::invalid_argument);
    const std::vector<double> e4{0.1, 0.05, 0.025, 0.0125}, v4{1, 0, 1, 1};
    EXPECT_THROW(fit_scaling_law(e4, v4), std::invalid_argument);
}

TEST(Parallel, EveryIndexRunsOnce) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, 4);
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsTaskException) {
    EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3), std::runtime_error);
}
