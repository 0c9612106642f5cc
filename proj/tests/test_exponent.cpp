#include <gtest/gtest.h>

#include "persist/exponent.hpp"
#include "persist/grid_engine.hpp"

using namespace persist;

namespace {

SurvivalCurve power_law(double gamma, double c, const std::vector<double>& ns) {
    SurvivalCurve curve;
    for (double n : ns) {
        SurvivalPoint p;
        p.horizon = n;
        p.logp = c - gamma * std::log(n);
        curve.add(p);
    }
    return curve;
}

QuenchedAggregate agg_of(std::vector<double> gs, double systematic = 0) {
    std::vector<ExponentFit> fits;
    for (double g : gs) {
        ExponentFit f;
        f.gamma_hat = g;
        fits.push_back(f);
    }
    return aggregate_quenched(fits, 1000, {1, 0}, systematic);
}

}  // namespace

TEST(Fit, ExactPowerLaw) {
    const auto f = fit_exponent(power_law(0.5, -0.3, dyadic_horizons(4, 12)), FitScale::log_time,
                                FitWindow::between(0, 1e9));
    EXPECT_NEAR(f.gamma_hat, 0.5, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_EQ(f.points, 9u);
}

TEST(Fit, AutomaticWindowDropsLowerThird) {
    const auto f = fit_exponent(power_law(0.7, 0, dyadic_horizons(4, 12)), FitScale::log_time);
    EXPECT_EQ(f.points, 6u);
    EXPECT_EQ(f.n_min, 128.0);
    EXPECT_NEAR(f.gamma_hat, 0.7, 1e-12);
}

TEST(Fit, TimeScale) {
    SurvivalCurve c;
    for (double t = 1; t <= 10; ++t) {
        SurvivalPoint p;
        p.horizon = t;
        p.logp = 0.2 - 1.6 * t;
        c.add(p);
    }
    EXPECT_NEAR(fit_exponent(c, FitScale::time).gamma_hat, 1.6, 1e-12);
}

TEST(Fit, SlopeStderrMatchesOls) {
    // independent OLS standard error on a noisy curve
    Rng rng({3, 0});
    SurvivalCurve c;
    std::vector<double> x, y;
    for (int k = 0; k < 12; ++k) {
        SurvivalPoint p;
        p.horizon = std::ldexp(1.0, k + 1);
        p.logp = -0.6 * std::log(p.horizon) + 0.05 * rng.normal();
        x.push_back(std::log(p.horizon));
        y.push_back(-p.logp);
        c.add(p);
    }
    const double n = 12;
    double mx = 0, my = 0;
    for (int i = 0; i < 12; ++i) mx += x[i] / n, my += y[i] / n;
    double sxx = 0, sxy = 0;
    for (int i = 0; i < 12; ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    const double b = sxy / sxx, a = my - b * mx;
    double rss = 0;
    for (int i = 0; i < 12; ++i) rss += (y[i] - a - b * x[i]) * (y[i] - a - b * x[i]);
    const auto f = fit_exponent(c, FitScale::log_time, FitWindow::between(0, 1e9));
    EXPECT_NEAR(f.gamma_hat, b, 1e-12);
    EXPECT_NEAR(f.stderr_, std::sqrt(rss / (n - 2) / sxx), 1e-12);
}

TEST(Fit, InfeasibleEntry) {
    auto c = power_law(0.5, 0, dyadic_horizons(1, 8));
    c.entries.back().logp = neg_inf;
    const auto f = fit_exponent(c, FitScale::log_time);
    EXPECT_TRUE(f.infeasible);
    EXPECT_EQ(f.gamma_hat, pos_inf);
}

TEST(Fit, TooFewPoints) {
    EXPECT_THROW(fit_exponent(power_law(0.5, 0, {2, 4, 8}), FitScale::log_time, FitWindow::between(0, 100)), Error);
}

TEST(Fit, ZeroWallBallot) {
    auto s = WallSpec::zero();
    s.dt = 1.0;
    const auto w = realize_wall(s, 1024, {});
    GridConfig cfg;
    cfg.dx = 0.2;
    const auto curve = grid_survival(w, 1.0, dyadic_horizons(4, 10), EndWindow::none(), cfg);
    // exact: -log(2 Phi(1/sqrt N) - 1)
    for (const auto& e : curve.entries)
        EXPECT_NEAR(e.logp, std::log(2 * normal_cdf(1 / std::sqrt(e.horizon)) - 1), 0.02);
    EXPECT_NEAR(fit_exponent(curve, FitScale::log_time).gamma_hat, 0.5, 0.02);
}

TEST(Aggregate, IdenticalFitsGiveZeroWidth) {
    const auto a = agg_of({0.6, 0.6, 0.6, 0.6});
    EXPECT_EQ(a.ci_lo, 0.6);
    EXPECT_EQ(a.ci_hi, 0.6);
}

TEST(Aggregate, BootstrapCoversMean) {
    Rng rng({5, 0});
    std::vector<double> g;
    for (int i = 0; i < 40; ++i) g.push_back(0.7 + 0.1 * rng.normal());
    const auto a = agg_of(g);
    EXPECT_LT(a.ci_lo, a.mean);
    EXPECT_GT(a.ci_hi, a.mean);
    // roughly 1.96 * sd / sqrt(n)
    EXPECT_NEAR(a.ci_hi - a.ci_lo, 2 * 1.96 * a.sd / std::sqrt(40.0), 0.3 * (a.ci_hi - a.ci_lo));
}

TEST(Aggregate, SystematicWidensInQuadrature) {
    const auto a = agg_of({0.6, 0.6, 0.6}, 0.01);
    EXPECT_NEAR(a.ci_hi - a.mean, 1.959963984540054 * 0.01, 1e-15);
}

TEST(Aggregate, ExcludesInfeasible) {
    std::vector<ExponentFit> fits(3);
    fits[0].gamma_hat = 0.5;
    fits[1].gamma_hat = 0.7;
    fits[2].infeasible = true;
    fits[2].gamma_hat = pos_inf;
    const auto a = aggregate_quenched(fits);
    EXPECT_EQ(a.n_walls, 2u);
    EXPECT_EQ(a.excluded, 1u);
    EXPECT_NEAR(a.mean, 0.6, 1e-15);
}

TEST(Aggregate, Percentile) {
    EXPECT_EQ(percentile({3, 1, 2}, 0.5), 2.0);
    EXPECT_EQ(percentile({1, 2, 3, 4, 5}, 0.0), 1.0);
    EXPECT_NEAR(percentile({0, 10}, 0.25), 2.5, 1e-15);
}

TEST(BetaScan, Verdicts) {
    const auto scan = scan_beta({-1, 0, 1, 2}, [](double b) {
        const double g = 0.5 + 0.3 * b * b;
        return agg_of({g - 0.01, g, g + 0.01});
    });
    ASSERT_TRUE(scan.symmetric.has_value());
    EXPECT_TRUE(*scan.symmetric);
    EXPECT_TRUE(*scan.convex);
    EXPECT_TRUE(*scan.monotone);
    EXPECT_TRUE(*scan.separated_0_1);

    const auto single = scan_beta({1}, [](double) { return agg_of({0.7}); });
    EXPECT_FALSE(single.symmetric.has_value());
    EXPECT_FALSE(single.convex.has_value());
}

TEST(BetaScan, ConcaveRejected) {
    const auto scan = scan_beta({0, 1, 2}, [](double b) {
        const double g = 0.5 + std::sqrt(b);
        return agg_of({g - 0.001, g, g + 0.001});
    });
    EXPECT_FALSE(*scan.convex);
}

TEST(Relevance, MismatchRefused) {
    const ModelTag q{"ou", 1, 1, 1}, a{"ou", 1, 2, 1};
    EXPECT_THROW(disorder_relevance_report(agg_of({1.5}), q, 1.0, a), Error);
    const auto v = disorder_relevance_report(agg_of({1.4, 1.5, 1.6}), q, 1.0, q);
    EXPECT_TRUE(v.relevant);
}

TEST(Jensen, Holds) {
    const auto j = jensen_check({std::log(0.1), std::log(0.5), std::log(0.9)});
    EXPECT_TRUE(j.holds);
    EXPECT_NEAR(j.neg_log_mean, -std::log(0.5), 1e-15);
    EXPECT_GT(j.mean_neg_log, j.neg_log_mean);
    EXPECT_TRUE(jensen_check({-2.0, -2.0}).holds);
}

TEST(Ratio, Overlap) {
    EXPECT_TRUE(ratio_invariance_check(agg_of({0.7, 0.75, 0.8}), agg_of({0.72, 0.78, 0.83})).pass);
    EXPECT_FALSE(ratio_invariance_check(agg_of({0.5, 0.5001}), agg_of({0.9, 0.9001})).pass);
}

TEST(Spread, MatchesDirectComputation) {
    std::vector<SurvivalCurve> curves;
    for (double c : {0.0, 1.0, 2.0}) curves.push_back(power_law(0.5, c, {4, 16, 64}));
    const auto sp = normalized_spread(curves, FitScale::log_time);
    ASSERT_EQ(sp.size(), 3u);
    for (const auto& p : sp) EXPECT_NEAR(p.sd, 1.0 / std::log(p.horizon), 1e-12);
    EXPECT_GT(sp[0].sd, sp[2].sd);
    curves[1].entries[0].logp = neg_inf;
    EXPECT_TRUE(normalized_spread(curves, FitScale::log_time).empty());
}
