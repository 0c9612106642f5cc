#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "persist/walls.hpp"

using namespace persist;

TEST(Walls, ZeroWall) {
    const auto w = realize_wall(WallSpec::zero(), 10, {1, 0});
    for (double v : w.values.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(w.at(7.3), 0.0);
}

TEST(Walls, BrownianScaling) {
    const auto a = realize_wall(WallSpec::brownian(1.0, 0.25), 8, {2, 1});
    const auto b = realize_wall(WallSpec::brownian(-2.5, 0.25), 8, {2, 1});
    ASSERT_EQ(a.values.size(), b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_DOUBLE_EQ(b.values.values[i], -2.5 * a.values.values[i]);
    EXPECT_EQ(a.underlying.values, b.underlying.values);
}

TEST(Walls, HorizonGuard) {
    const auto w = realize_wall(WallSpec::brownian(1.0, 0.5), 4, {3, 0});
    EXPECT_THROW(w.at(4.5), Error);
    EXPECT_THROW(apply_perturbation(w, 4.5), Error);
}

TEST(Walls, InvalidSpecs) {
    auto s = WallSpec::brownian(std::nan(""));
    EXPECT_THROW(realize_wall(s, 1, {}), Error);
    auto p = WallSpec::zero();
    p.perturbation = Perturbation::power(1.0, 0.0);
    EXPECT_THROW(realize_wall(p, 1, {}), Error);
    auto g = WallSpec::zero();
    g.offset = Offset{0.0, 0.0};
    EXPECT_THROW(realize_wall(g, 1, {}), Error);
    EXPECT_THROW(realize_wall(WallSpec::random_walk(StepLaw::two_point(-1, 1, 0.7), 1.0), 4, {}), Error);
}

TEST(Walls, Perturbation) {
    auto s = WallSpec::brownian(1.0, 1.0);
    s.perturbation = Perturbation::power(1.0, 0.1);
    const auto w = realize_wall(s, 16, {4, 0});
    EXPECT_NEAR(apply_perturbation(w, 16) - w.at(16), std::pow(16.0, 0.4), 1e-12);
    EXPECT_NEAR(std::pow(16.0, 0.4), 3.0314, 1e-4);
    EXPECT_EQ((*s.perturbation)(0.0), 0.0);
    auto plain = WallSpec::brownian(1.0, 1.0);
    EXPECT_EQ(apply_perturbation(realize_wall(plain, 16, {4, 0}), 9), w.at(9));
}

TEST(Walls, PerturbationTable) {
    Perturbation p;
    p.table_times = {0, 1, 3};
    p.table_values = {0, 2, 3};
    EXPECT_EQ(p(0.5), 1.0);
    EXPECT_EQ(p(2.0), 2.5);
    EXPECT_EQ(p(10.0), 3.0);
}

TEST(Walls, OffsetIsSlowlyVarying) {
    const Offset g{0.5, 2.0};
    EXPECT_EQ(g(0.0), 0.5);
    EXPECT_LT(std::log(g(1e12)) / std::log(1e12), std::log(g(1e6)) / std::log(1e6));
}

TEST(Walls, EnvironmentTwoPoint) {
    EnvModel m;
    m.family = EnvFamily::two_point_random_bias;
    m.bias_values = {0.25, 0.75};
    const auto w = realize_wall(WallSpec::environment(m), 200, {5, 0});
    std::set<double> incs;
    for (std::size_t i = 1; i < w.values.size(); ++i) incs.insert(w.values.values[i] - w.values.values[i - 1]);
    EXPECT_EQ(incs, (std::set<double>{-0.5, 0.5}));
}

TEST(Walls, EnvironmentDegenerate) {
    EnvModel m;
    m.mean_sd = 0.0;
    const auto w = realize_wall(WallSpec::environment(m), 50, {6, 0});
    for (double v : w.values.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(m.var_wall(), 0.0);
}

TEST(Walls, EnvironmentRejectsDegenerateWalk) {
    EnvModel m;
    m.step_sd = 0.0;
    EXPECT_THROW(m.validate(), Error);
}

TEST(Walls, FeasibilitySupport) {
    const auto pm1 = StepLaw::rademacher();
    EXPECT_EQ(check_feasibility(pm1, WallSpec::random_walk(pm1, 1.0), 0).status, FeasibilityStatus::always_feasible);
    EXPECT_EQ(check_feasibility(pm1, WallSpec::random_walk(StepLaw::two_point(-2, 2, 0.5), 1.0), 0).status,
              FeasibilityStatus::infeasible);
    EXPECT_EQ(check_feasibility(StepLaw::gaussian(0, 1), WallSpec::random_walk(StepLaw::two_point(-2, 2, 0.5), 1.0), 0)
                  .status,
              FeasibilityStatus::always_feasible);
}

TEST(Walls, FeasibilityWitness) {
    const auto spec = WallSpec::random_walk(StepLaw::two_point(-2, 2, 0.5), 1.0);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto w = realize_wall(spec, 12, {7, s});
        const auto f = check_feasibility(StepLaw::rademacher(), w, 0.5);
        // independent scan of the top path 0.5 + n
        std::optional<std::size_t> first;
        for (std::size_t n = 0; n <= 12 && !first; ++n)
            if (0.5 + double(n) < w.values.values[n]) first = n;
        EXPECT_EQ(f.witness, first);
        EXPECT_EQ(f.status, first ? FeasibilityStatus::infeasible : FeasibilityStatus::feasible_at_x);
    }
}

TEST(Walls, WallRoundTrip) {
    const auto w = realize_wall(WallSpec::brownian(1.5, 0.125), 3, {8, 2});
    std::stringstream ss;
    write_wall(ss, w, "brownian(1.5)");
    const auto r = read_wall(ss);
    EXPECT_EQ(r.spec_text, "brownian(1.5)");
    EXPECT_EQ(r.seed, w.seed);
    EXPECT_EQ(r.values, w.values.values);
    EXPECT_EQ(r.times.size(), w.values.size());
}

TEST(Walls, Deterministic) {
    const auto a = realize_wall(WallSpec::ou_wall(1, 1, 1, 0.1), 5, {9, 4});
    const auto b = realize_wall(WallSpec::ou_wall(1, 1, 1, 0.1), 5, {9, 4});
    EXPECT_EQ(a.values.values, b.values.values);
}
