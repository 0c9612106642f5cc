#include <gtest/gtest.h>

#include "persist/paths.hpp"

using namespace persist;

TEST(Paths, DegenerateGrid) {
    const auto p = sample_bm(TimeGrid({0.0}), RngStream{1, 0});
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p.values[0], 0.0);
}

TEST(Paths, EmptyGridRejected) { EXPECT_THROW(TimeGrid(std::vector<double>{}), Error); }

TEST(Paths, BmMarginalAtTwo) {
    const int n = 100000;
    Rng rng({3, 0});
    const TimeGrid g({0.0, 1.0, 2.0});
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_bm(g, rng).values[2];
        s += v;
        s2 += v * v;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(2.0 / n));
    EXPECT_NEAR(var, 2.0, 3 * 2.0 * std::sqrt(2.0 / n));
}

TEST(Paths, BmDeterministic) {
    const auto g = TimeGrid::uniform(0.1, 50);
    EXPECT_EQ(sample_bm(g, RngStream{4, 9}).values, sample_bm(g, RngStream{4, 9}).values);
}

TEST(Paths, OuTransition) {
    const OuParams p{1.0, 1.0};
    const auto [m, v] = p.transition(2.0, std::log(2.0));
    EXPECT_NEAR(m, 1.0, 1e-15);
    EXPECT_NEAR(v, 0.375, 1e-15);
}

TEST(Paths, OuStationaryVariance) {
    const OuParams p{1.0, 1.0};
    Rng rng({5, 0});
    const int n = 100000;
    double s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_ou(p, 0.0, TimeGrid({0.0, 50.0}), rng).values[1];
        s2 += v * v;
    }
    EXPECT_NEAR(s2 / n, 0.5, 3 * 0.5 * std::sqrt(2.0 / n));
}

TEST(Paths, OuNoiselessDecay) {
    const OuParams p{2.0, 1e-300};
    const auto [m, v] = p.transition(3.0, 0.7);
    EXPECT_NEAR(m, 3.0 * std::exp(-1.4), 1e-15);
    EXPECT_LT(v, 1e-300);
}

TEST(Paths, OuFromBm) {
    const auto bm = sample_bm(TimeGrid::uniform(0.01, 1000), RngStream{6, 0});
    EXPECT_EQ(ou_from_bm(1.7, 1.0, 1.0, 0.0, bm), 1.7);
    EXPECT_NE(ou_from_bm(1.0, 1.0, 1.0, 0.5, bm), ou_from_bm(1.0, 2.0, 1.0, 0.5, bm));
    // e^{2 mu t} - 1 beyond the path horizon
    EXPECT_THROW(ou_from_bm(1.0, 1.0, 1.0, 5.0, bm), Error);
}

TEST(Paths, OuFromBmMatchesFormula) {
    const auto bm = sample_bm(TimeGrid::uniform(0.001, 10000), RngStream{6, 1});
    const double t = 0.4, mu = 1.3, s = std::expm1(2 * mu * t);
    const double expect = 0.8 * std::exp(-mu * t) + 2.0 / std::sqrt(2 * mu) * std::exp(-mu * t) * bm.at(s);
    EXPECT_NEAR(ou_from_bm(0.8, mu, 2.0, t, bm), expect, 1e-12);
}

TEST(Paths, BridgeNoncrossing) {
    EXPECT_NEAR(bridge_noncrossing(1, 1, 1, 1), 1 - std::exp(-2.0), 1e-15);
    EXPECT_NEAR(bridge_noncrossing(1, 1, 1, 1), 0.864665, 1e-6);
    EXPECT_EQ(bridge_noncrossing(0, 1, 1, 1), 0.0);
    EXPECT_NEAR(bridge_noncrossing(3, 3, 0.01, 1), 1.0, 1e-15);
}

TEST(Paths, BridgeMatchesSimulation) {
    // fine Euler bridge from a = 0.5 to b = 0.8 over dt = 1
    Rng rng({7, 0});
    const int n = 20000, k = 2000;
    int ok = 0;
    for (int i = 0; i < n; ++i) {
        double w = 0;
        std::vector<double> path(k + 1, 0.0);
        for (int j = 1; j <= k; ++j) path[j] = w += rng.normal(0, std::sqrt(1.0 / k));
        bool alive = true;
        for (int j = 0; j <= k && alive; ++j) {
            const double s = double(j) / k;
            const double x = 0.5 + (0.8 - 0.5) * s + path[j] - s * path[k];
            alive = x > 0;
        }
        ok += alive;
    }
    const double p = bridge_noncrossing(0.5, 0.8, 1, 1);
    // discrete monitoring overestimates survival slightly
    EXPECT_NEAR(double(ok) / n, p, 4 * std::sqrt(p * (1 - p) / n) + 0.02);
}
