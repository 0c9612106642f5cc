#include <gtest/gtest.h>

#include "persist/grid_engine.hpp"
#include "support.hpp"

using namespace persist;
using persist::test::enumerate_survival;
using persist::test::fixed_wall;

namespace {

GridConfig rw_config(const StepLaw& law) {
    GridConfig c;
    c.process = ProcessSpec::random_walk(law);
    c.dx = 0.0;
    return c;
}

WallSpec zero_wall(double dt) {
    auto s = WallSpec::zero();
    s.dt = dt;
    return s;
}

double bm_log_survival(const WallRealization& w, double x0, double T, bool bridge, double dx) {
    GridConfig c;
    c.dx = dx;
    c.bridge = bridge;
    GridRun run(w, c, x0);
    run.advance_to(w.step_index(T));
    return run.log_survival(EndWindow::none());
}

}  // namespace

TEST(Grid, SimpleWalkTwoSteps) {
    const auto w = fixed_wall({0, 0, 0});
    GridRun run(w, rw_config(StepLaw::rademacher()), 1.0);
    run.advance_to(2);
    EXPECT_NEAR(std::exp(run.log_survival(EndWindow::none())), 0.75, 1e-15);
}

TEST(Grid, StartBelowBarrierDies) {
    const auto w = fixed_wall({2, 0});
    GridRun run(w, rw_config(StepLaw::rademacher()), 1.0);
    EXPECT_TRUE(run.density().died);
    EXPECT_EQ(run.log_survival(EndWindow::none()), neg_inf);
}

TEST(Grid, UnconstrainedIsConvolution) {
    const auto w = fixed_wall(std::vector<double>(9, -1e9));
    GridRun run(w, rw_config(StepLaw::rademacher()), 0.0);
    run.advance_to(8);
    EXPECT_NEAR(run.log_survival(EndWindow::none()), 0.0, 1e-14);
    // binomial masses
    const auto& d = run.density();
    double c = 1;
    for (int k = 0; k <= 8; ++k) {
        const double x = -8 + 2 * k;
        const double mass = std::exp(d.log_mass_where([&](double y) { return std::abs(y - x) < 1e-9; }));
        EXPECT_NEAR(mass, c / 256.0, 1e-14);
        c = c * (8 - k) / (k + 1);
    }
}

TEST(Grid, MatchesEnumeration) {
    Rng rng({42, 0});
    const std::vector<double> steps{-1, 0, 2};
    const std::vector<double> probs{0.5, 0.2, 0.3};
    const StepLaw law(DiscreteLaw{steps, probs});
    for (int t = 0; t < 10; ++t) {
        const std::size_t N = 6 + t % 4;
        std::vector<double> wall(N + 1, 0.0);
        for (std::size_t n = 1; n <= N; ++n) wall[n] = wall[n - 1] + (rng.uniform() < 0.5 ? -1 : 1);
        const double x0 = 1 + t % 3;
        const auto w = fixed_wall(wall);
        GridRun run(w, rw_config(law), x0);
        run.advance_to(N);
        const double a = -0.5 * std::sqrt(double(N)), b = std::sqrt(double(N));
        const double exact = enumerate_survival(steps, probs, wall, x0, N, a, b);
        EXPECT_NEAR(std::exp(run.log_survival(EndWindow::sqrt_scaled(-0.5, 1.0))), exact, 1e-13);
        EXPECT_NEAR(std::exp(run.log_survival(EndWindow::none())), enumerate_survival(steps, probs, wall, x0, N),
                    1e-13);
    }
}

TEST(Grid, GaussianOneStepWithoutBridge) {
    const auto w = realize_wall(zero_wall(1.0), 1, {});
    EXPECT_NEAR(std::exp(bm_log_survival(w, 1.0, 1, false, 0.01)), normal_cdf(1.0), 2e-3);
}

TEST(Grid, GaussianOneStepWithBridge) {
    const auto w = realize_wall(zero_wall(1.0), 1, {});
    const double with = std::exp(bm_log_survival(w, 1.0, 1, true, 0.01));
    EXPECT_LT(with, normal_cdf(1.0));
    // reflection principle: P(min_{[0,1]} W > -1) = 2 Phi(1) - 1
    EXPECT_NEAR(with, 2 * normal_cdf(1.0) - 1, 2e-3);
}

TEST(Grid, BridgeMakesTimeStepIrrelevant) {
    const auto w1 = realize_wall(zero_wall(1.0), 64, {});
    const auto w4 = realize_wall(zero_wall(0.25), 64, {});
    EXPECT_NEAR(bm_log_survival(w1, 1.0, 64, true, 0.05), bm_log_survival(w4, 1.0, 64, true, 0.05), 1e-10);
    EXPECT_GT(std::abs(bm_log_survival(w1, 1.0, 64, false, 0.05) - bm_log_survival(w4, 1.0, 64, false, 0.05)), 1e-3);
}

TEST(Grid, ZeroWallBallot) {
    // P(min_{[0,T]} W > -1) = 2 Phi(1/sqrt T) - 1
    const auto w = realize_wall(zero_wall(1.0), 256, {});
    for (double T : {16.0, 64.0, 256.0})
        EXPECT_NEAR(std::exp(bm_log_survival(w, 1.0, T, true, 0.02)), 2 * normal_cdf(1 / std::sqrt(T)) - 1,
                    2e-3 * (2 * normal_cdf(1 / std::sqrt(T)) - 1));
}

TEST(Grid, LoweredBarrierHelps) {
    auto up = WallSpec::brownian(1.0, 1.0);
    auto down = up;
    down.perturbation = Perturbation::power(-1.0, 0.1);
    const auto a = realize_wall(up, 64, {3, 1});
    const auto b = realize_wall(down, 64, {3, 1});
    EXPECT_GE(bm_log_survival(b, 1.0, 64, true, 0.1), bm_log_survival(a, 1.0, 64, true, 0.1));
}

TEST(Grid, CurveIsMonotone) {
    const auto w = realize_wall(WallSpec::brownian(1.0, 1.0), 256, {5, 2});
    GridConfig c;
    c.dx = 0.1;
    const auto curve = grid_survival(w, 1.0, {4, 16, 64, 256}, EndWindow::none(), c);
    for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve.entries[i].logp, curve.entries[i - 1].logp);
    EXPECT_EQ(curve.entries[0].estimator, "grid");
}

TEST(Grid, OuZeroWallExponent) {
    // OU above 0: survival decays like e^{-mu t}
    auto s = WallSpec::zero();
    s.dt = 1.0 / 16;
    const auto w = realize_wall(s, 12, {});
    GridConfig c;
    c.process = ProcessSpec::ornstein_uhlenbeck(1.0);
    c.dx = 0.02;
    const auto curve = grid_survival(w, 1.0, {8, 12}, EndWindow::none(), c);
    EXPECT_NEAR(-(curve.entries[1].logp - curve.entries[0].logp) / 4, 1.0, 0.01);
}
