#include <gtest/gtest.h>

#include "persist/excursions.hpp"

using namespace persist;

TEST(Excursions, Triangle) {
    const PathSample p{TimeGrid({0.0, 1.0, 2.0}), {0.0, 1.0, 0.0}};
    const auto d = decompose(p);
    ASSERT_EQ(d.count(), 1u);
    EXPECT_DOUBLE_EQ(d.rho[0], 0.0);
    EXPECT_DOUBLE_EQ(d.rho[1], 2.0);
    EXPECT_DOUBLE_EQ(d.r[0], 2.0);
    EXPECT_DOUBLE_EQ(d.maxima[0], 1.0);
    EXPECT_GE(d.tau[0], d.rho[0]);
    EXPECT_LT(d.tau[0], d.rho[1]);
}

TEST(Excursions, NeverReachesThreshold) {
    const PathSample p{TimeGrid::uniform(0.1, 100), std::vector<double>(101, 0.3)};
    const auto d = decompose(p);
    EXPECT_EQ(d.count(), 0u);
    EXPECT_FALSE(d.warning.empty());
}

TEST(Excursions, OuStructure) {
    const auto w = realize_wall(WallSpec::ou_wall(1, 1, 1, 1.0 / 32), 400, {3, 0});
    const auto d = decompose(w.underlying);
    ASSERT_GT(d.count(), 20u);
    for (std::size_t i = 0; i < d.count(); ++i) {
        EXPECT_NEAR(d.r[i], d.rho[i + 1] - d.rho[i], 1e-12);
        double sup = 0, sup_abs = 0;
        for (double v : d.segments[i].values) sup = std::max(sup, v), sup_abs = std::max(sup_abs, std::abs(v));
        EXPECT_EQ(d.maxima[i], sup);
        EXPECT_GE(sup_abs, 1.0);
        EXPECT_GE(d.tau[i], d.rho[i]);
        EXPECT_LT(d.tau[i], d.rho[i + 1]);
    }
    EXPECT_NEAR(d.mean_duration(), (d.rho.back() - d.rho.front()) / double(d.count()), 1e-9);
}

TEST(Blocks, Subadditive) {
    const auto w = realize_wall(WallSpec::ou_wall(1, 1, 1, 1.0 / 16), 200, {4, 0});
    const auto d = decompose(w.underlying);
    ASSERT_GE(d.count(), 4u);
    GridConfig cfg;
    cfg.process = ProcessSpec::ornstein_uhlenbeck(1.0);
    cfg.dx = 0.05;
    const BlockInterval I;
    for (std::size_t n = 2; n <= 4; ++n)
        for (std::size_t m = 1; m < n; ++m)
            EXPECT_LE(block_logprob(w, d, 0, n, I, cfg).q,
                      block_logprob(w, d, 0, m, I, cfg).q + block_logprob(w, d, m, n, I, cfg).q + 1e-6);
}

TEST(Blocks, RowMatchesSingleBlocks) {
    const auto w = realize_wall(WallSpec::ou_wall(1, 1, 1, 1.0 / 16), 200, {4, 1});
    const auto d = decompose(w.underlying);
    ASSERT_GE(d.count(), 4u);
    GridConfig cfg;
    cfg.process = ProcessSpec::ornstein_uhlenbeck(1.0);
    cfg.dx = 0.05;
    const auto row = block_logprob_row(w, d, 1, 4, BlockInterval{}, cfg);
    for (const auto& b : row) EXPECT_NEAR(b.q, block_logprob(w, d, 1, b.n, BlockInterval{}, cfg).q, 1e-12);
}

TEST(Blocks, HigherStartIsCheaper) {
    const auto w = realize_wall(WallSpec::ou_wall(1, 1, 1, 1.0 / 16), 200, {4, 2});
    const auto d = decompose(w.underlying);
    GridConfig cfg;
    cfg.process = ProcessSpec::ornstein_uhlenbeck(1.0);
    cfg.dx = 0.05;
    // survival is monotone in the starting point
    GridRun from_lo(w, cfg, 0.5 + w.values.values[d.rho_index[0]], d.rho_index[0]);
    GridRun from_hi(w, cfg, 2.0 + w.values.values[d.rho_index[0]], d.rho_index[0]);
    from_lo.advance_to(d.rho_index[2]);
    from_hi.advance_to(d.rho_index[2]);
    EXPECT_GE(from_hi.log_survival(EndWindow::none()), from_lo.log_survival(EndWindow::none()));
}
