#include <gtest/gtest.h>

#include "persist/oracle.hpp"
#include "support.hpp"

using namespace persist;
using persist::test::enumerate_survival;

TEST(BruteForce, TwoSteps) {
    const std::vector<double> zero(3, 0.0);
    EXPECT_DOUBLE_EQ(brute_force_survival(StepLaw::rademacher(), zero, 1, 2, EndWindow::none()), 0.75);
    EXPECT_DOUBLE_EQ(brute_force_survival(StepLaw::rademacher(), zero, 1, 2, EndWindow::sqrt_scaled(0, pos_inf)), 0.25);
}

TEST(BruteForce, ZeroSteps) {
    EXPECT_EQ(brute_force_survival(StepLaw::rademacher(), {0.0}, 0.0, 0, EndWindow::none()), 1.0);
    EXPECT_EQ(brute_force_survival(StepLaw::rademacher(), {0.5}, 0.0, 0, EndWindow::none()), 0.0);
}

TEST(BruteForce, AgreesWithIndependentEnumeration) {
    Rng rng({9, 0});
    const std::vector<double> v{-2, 1, 3}, p{0.5, 0.3, 0.2};
    for (int t = 0; t < 20; ++t) {
        const std::size_t N = 3 + t % 6;
        std::vector<double> wall(N + 1, 0.0);
        for (std::size_t n = 1; n <= N; ++n) wall[n] = wall[n - 1] + std::floor(rng.uniform() * 3) - 1;
        const double exact = enumerate_survival(v, p, wall, 2, N);
        EXPECT_NEAR(brute_force_survival(StepLaw(DiscreteLaw{v, p}), wall, 2, N, EndWindow::none()), exact,
                    1e-13 * exact);
    }
}

TEST(BruteForce, SizeLimit) {
    EXPECT_THROW(brute_force_survival(StepLaw::rademacher(), std::vector<double>(41, 0.0), 1, 40, EndWindow::none()),
                 Error);
    EXPECT_THROW(brute_force_survival(StepLaw::gaussian(0, 1), std::vector<double>(3, 0.0), 1, 2, EndWindow::none()),
                 Error);
}

TEST(Fkg, TwoStepExample) {
    MonotoneEvent A{{{ThresholdAtom{2, 0.0, true}}}};
    MonotoneEvent B{{{ThresholdAtom{1, 0.0, true}}}};
    const auto r = fkg_brute_check(StepLaw::rademacher(), 2, A, B);
    EXPECT_DOUBLE_EQ(r.p_ab, 0.5);
    EXPECT_DOUBLE_EQ(r.p_a, 0.75);
    EXPECT_DOUBLE_EQ(r.p_b, 0.5);
    EXPECT_TRUE(r.holds);
}

TEST(Fkg, FullSpaceAndSelf) {
    MonotoneEvent B{{{ThresholdAtom{3, 1.0, true}, ThresholdAtom{1, 1.0, true}}}};
    const auto full = fkg_brute_check(StepLaw::rademacher(), 4, MonotoneEvent::full_space(), B);
    EXPECT_DOUBLE_EQ(full.p_ab, full.p_b);
    EXPECT_DOUBLE_EQ(full.p_a, 1.0);
    const auto self = fkg_brute_check(StepLaw::rademacher(), 4, B, B);
    EXPECT_DOUBLE_EQ(self.p_ab, self.p_a);
    EXPECT_GE(self.p_ab, self.p_a * self.p_a);
}

TEST(Fkg, RejectsDecreasingAtom) {
    MonotoneEvent A{{{ThresholdAtom{1, 0.0, false}}}};
    EXPECT_THROW(fkg_brute_check(StepLaw::rademacher(), 2, A, MonotoneEvent::full_space()), Error);
}

TEST(Fkg, SurvivalEventsAreIncreasing) {
    // survival above a wall is an intersection of increasing atoms; FKG makes survival positively correlated
    const std::size_t N = 8;
    MonotoneEvent early, late;
    std::vector<ThresholdAtom> e, l;
    for (std::size_t n = 1; n <= 4; ++n) e.push_back({n, -1.0, true});
    for (std::size_t n = 5; n <= N; ++n) l.push_back({n, -1.0, true});
    early.clauses = {e};
    late.clauses = {l};
    const auto r = fkg_brute_check(StepLaw::rademacher(), N, early, late);
    EXPECT_GT(r.p_ab, r.p_a * r.p_b);
}
