#include <gtest/gtest.h>

#include "persist/environment.hpp"
#include "persist/tilt.hpp"

using namespace persist;

TEST(Tilt, GaussianClosedForm) {
    const auto t = tilt(StepLaw::gaussian(0, 1), 0.3);
    EXPECT_NEAR(t.law.as_gaussian().mean, 0.3, 1e-15);
    EXPECT_NEAR(t.law.as_gaussian().sd, 1.0, 1e-15);
    EXPECT_NEAR(t.log_psi, 0.045, 1e-15);
}

TEST(Tilt, ZeroIsIdentity) {
    const auto base = StepLaw::two_point(-1, 3, 0.25);
    const auto t = tilt(base, 0.0);
    EXPECT_EQ(t.law.as_discrete().probs, base.as_discrete().probs);
    EXPECT_EQ(t.log_psi, 0.0);
}

TEST(Tilt, FairCoin) {
    const auto t = tilt(StepLaw::rademacher(), 0.5);
    const double expect = std::exp(0.5) / (std::exp(0.5) + std::exp(-0.5));
    EXPECT_NEAR(t.law.as_discrete().probs[1], expect, 1e-15);
    EXPECT_NEAR(expect, 0.7311, 1e-4);
    EXPECT_NEAR(t.mean(), std::tanh(0.5), 1e-15);
}

TEST(Tilt, OutOfRange) { EXPECT_THROW(tilt(StepLaw::rademacher(), 0.6, 0.5), Error); }

TEST(TiltBracket, Families) {
    std::vector<double> thetas;
    for (int i = 1; i <= 10; ++i) thetas.push_back(0.05 * i);
    for (const auto& law : {StepLaw::gaussian(0, 1), StepLaw::rademacher(), StepLaw::two_point(-1, 3, 0.25)}) {
        const auto r = tilted_mean_bracket_check(law, thetas);
        EXPECT_TRUE(r.pass);
        for (const auto& row : r.rows) {
            // independent tilted mean: E[X e^{theta X}] / E[e^{theta X}]
            double num = 0, den = 0;
            if (law.is_gaussian()) {
                num = row.theta;
                den = 1;
            } else {
                const auto& d = law.as_discrete();
                for (std::size_t i = 0; i < d.values.size(); ++i) {
                    num += d.probs[i] * d.values[i] * std::exp(row.theta * d.values[i]);
                    den += d.probs[i] * std::exp(row.theta * d.values[i]);
                }
            }
            EXPECT_NEAR(row.m, num / den, 1e-9);
            EXPECT_LE(row.deviation, row.bound);
        }
    }
}

TEST(TiltBracket, RefusesNonCentered) {
    EXPECT_THROW(tilted_mean_bracket_check(StepLaw::gaussian(0.1, 1), {0.1}), Error);
    EXPECT_THROW(tilted_mean_bracket_check(StepLaw::rademacher(), {0.9}), Error);
}

TEST(TailBounds, Values) {
    const auto [lo, hi] = gaussian_tail_bounds(1.0);
    EXPECT_NEAR(lo, 0.12099, 1e-5);
    EXPECT_NEAR(hi, 0.24197, 1e-5);
    EXPECT_LT(lo, normal_upper_tail(1.0));
    EXPECT_GT(hi, normal_upper_tail(1.0));
    const auto [lo3, hi3] = gaussian_tail_bounds(3.0);
    EXPECT_LT(lo3, 0.0013499);
    EXPECT_GT(hi3, 0.0013499);
    const auto [lo10, hi10] = gaussian_tail_bounds(10.0);
    EXPECT_NEAR(hi10 / lo10, 1.01, 1e-12);
    EXPECT_THROW(gaussian_tail_bounds(0.0), Error);
}

TEST(Schedule, Values) {
    EXPECT_EQ(schedule_tilt(TiltSchedule::decaying, 1.0, 2, 100), 0.0);
    EXPECT_NEAR(schedule_tilt(TiltSchedule::decaying, 1.0, 100, 100), std::log(std::log(100.0)) / 10, 1e-15);
    EXPECT_EQ(schedule_tilt(TiltSchedule::constant, 1.0, 5, 100), schedule_tilt(TiltSchedule::decaying, 1.0, 100, 100));
    EXPECT_EQ(schedule_tilt(TiltSchedule::none, 1.0, 50, 100), 0.0);
}

TEST(FastGrowth, AgreesWithPlainMonteCarlo) {
    EnvModel m;
    const auto env = sample_env(m, 200, RngStream{1, 0});
    const auto is = fast_growth_estimate(env.laws, 200, 0.8, 20000, {1, 1}, TiltSchedule::decaying, 1.0);
    const auto mc = fast_growth_estimate(env.laws, 200, 0.8, 20000, {1, 2}, TiltSchedule::none);
    ASSERT_GT(mc.hits, 100u);
    const double joint = std::hypot(is.stderr_, mc.stderr_);
    EXPECT_NEAR(is.logp, mc.logp, 3 * joint);
    // the centered walk has sd 1 per step: tail of N(0, N) at the level
    EXPECT_NEAR(mc.logp, std::log(normal_upper_tail(is.level / std::sqrt(200.0))), 3 * mc.stderr_);
}

TEST(FastGrowth, LevelZeroNearHalf) {
    EnvModel m;
    const auto env = sample_env(m, 2, RngStream{2, 0});
    const auto est = fast_growth_estimate(env.laws, 2, 1.0, 20000, {2, 1});
    EXPECT_EQ(est.level, 0.0);
    EXPECT_NEAR(std::exp(est.logp), 0.5, 0.02);
}
