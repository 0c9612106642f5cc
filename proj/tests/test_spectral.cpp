#include <gtest/gtest.h>

#include "persist/spectral.hpp"

using namespace persist;

namespace {
SpectralProblem problem(double mu1, double mu2, double beta, double L = 6.0, double h = 0.1) {
    SpectralProblem p;
    p.mu1 = mu1;
    p.mu2 = mu2;
    p.beta = beta;
    p.half_width = L;
    p.h = h;
    return p;
}
}  // namespace

TEST(Spectral, EqualRatesIdentity) {
    EXPECT_NEAR(principal_eigenvalue(problem(1, 1, 1, 8, 0.05)).lambda1, 1.0, 0.02);
    EXPECT_NEAR(principal_eigenvalue(problem(2, 2, 0.5)).lambda1, 2.0, 0.04);
}

TEST(Spectral, RejectsDegenerateRates) {
    EXPECT_THROW(assemble_generator(problem(0, 1, 1)), Error);
    EXPECT_THROW(assemble_generator(problem(1, 1, 1, 6, 0.07)), Error);
}

TEST(Spectral, GeneratorRowsConserve) {
    // -L applied to a constant vanishes away from the boundary: interior row sums are zero
    const auto g = assemble_generator(problem(1, 2, 0.7, 3, 0.25));
    const int n = g.n_side;
    std::vector<double> rows(g.unknowns(), 0.0);
    for (int k = 0; k < g.minus_generator.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(g.minus_generator, k); it; ++it) rows[it.row()] += it.value();
    int interior = 0;
    for (std::size_t r = 0; r < g.unknowns(); ++r) {
        const int i = g.node_i[r], j = g.node_j[r];
        const bool near_box = i <= 1 || j <= 1 || i >= n - 2 || j >= n - 2;
        const double x = g.x(i), y = g.y(j);
        const bool near_barrier = std::abs(x - 0.7 * y) < 0.3;
        if (near_box || near_barrier) continue;
        EXPECT_NEAR(rows[r], 0.0, 1e-9);
        ++interior;
    }
    EXPECT_GT(interior, 0);
}

TEST(Spectral, MirrorSymmetryInBeta) {
    EXPECT_NEAR(principal_eigenvalue(problem(1, 2, 0.8)).lambda1, principal_eigenvalue(problem(1, 2, -0.8)).lambda1,
                1e-8);
}

TEST(Spectral, ZeroBetaIsOneDimensional) {
    // beta = 0 decouples: the wall coordinate is free and the walker sees a fixed barrier at 0
    const double two_d = principal_eigenvalue(problem(1.5, 1, 0)).lambda1;
    const double one_d = ou_halfline_eigenvalue(1.5, 1, 0, 6, 0.1);
    EXPECT_NEAR(two_d, one_d, 5e-3);
    EXPECT_NEAR(one_d, 1.5, 0.01);
}

TEST(Spectral, TruncationSensitivitySmall) { EXPECT_LT(truncation_sensitivity(problem(1, 1, 1)), 1e-3); }

TEST(Spectral, AnnealedAboveQuenchedDecayIsSpectral) {
    AnnealedConfig cfg;
    cfg.samples = 40000;
    cfg.dt = 1.0 / 32;
    const auto c = annealed_mc(1, 1, 1, 1.0, 0.0, {2, 4}, EndWindow::none(), cfg, {1, 0});
    ASSERT_EQ(c.size(), 2u);
    const double rate = -(c.entries[1].logp - c.entries[0].logp) / 2;
    EXPECT_NEAR(rate, 1.0, 0.15);
}
