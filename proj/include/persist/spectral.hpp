#pragma once

// Annealed exponent of OU-over-OU as the principal Dirichlet eigenvalue of
//   L = 1/2 (d_xx + d_yy) - mu1 x d_x - mu2 y d_y   on {x >= beta y} within [-L, L]^2,
// plus the one-dimensional analogue and an annealed Monte Carlo cross-check.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <iomanip>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/paths.hpp"
#include "persist/rng.hpp"
#include "persist/survival.hpp"

namespace persist {

enum class DriftScheme { upwind, central, hybrid };

struct SpectralProblem {
    double mu1 = 1.0;
    double mu2 = 1.0;
    double beta = 1.0;
    double half_width = 8.0;  // box [-L, L]^2
    double h = 0.05;
    DriftScheme scheme = DriftScheme::hybrid;

    int cells() const { return static_cast<int>(std::lround(2.0 * half_width / h)); }

    void validate() const {
        require(mu1 > 0.0 && mu2 > 0.0, ErrorKind::parameter_domain, "OU rates must be > 0");
        require(std::isfinite(beta), ErrorKind::invalid_input, "beta must be finite");
        require(half_width > 0.0 && h > 0.0, ErrorKind::invalid_input, "need L > 0 and h > 0");
        const double ratio = 2.0 * half_width / h;
        require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio, ErrorKind::invalid_input, "2L/h must be an integer");
    }
};

/// -L restricted to the interior unknowns, with the node bookkeeping needed to read results.
struct GeneratorMatrix {
    Eigen::SparseMatrix<double> minus_generator;
    std::vector<int> node_i, node_j;  // grid coordinates of each unknown
    int n_side = 0;                   // nodes per side, including the box boundary
    SpectralProblem problem;

    double x(int i) const { return -problem.half_width + problem.h * i; }
    double y(int j) const { return x(j); }
    std::size_t unknowns() const { return node_i.size(); }
};

namespace detail {

/// Coefficients (minus, centre, plus) of -(1/2 u'' + c u') at a node whose neighbours sit at
/// distances hm (below) and hp (above); neighbour values on the boundary are zero.
inline std::array<double, 3> fd_row(double hm, double hp, double c, DriftScheme scheme, bool& refused) {
    std::array<double, 3> k{};
    // diffusion 1/2 u''
    k[0] += 1.0 / (hm * (hm + hp));
    k[2] += 1.0 / (hp * (hm + hp));
    k[1] -= 1.0 / (hm * hp);
    const double hloc = std::max(hm, hp);
    const double peclet = std::abs(c) * hloc / 0.5;
    bool upwind = scheme == DriftScheme::upwind || (scheme == DriftScheme::hybrid && peclet > 2.0);
    if (scheme == DriftScheme::central && peclet > 2.0) refused = true;
    if (upwind) {
        if (c > 0) {
            k[2] += c / hp;
            k[1] -= c / hp;
        } else {
            k[1] += c / hm;
            k[0] -= c / hm;
        }
    } else {
        const double den = hp * hm * (hp + hm);
        k[2] += c * hm * hm / den;
        k[0] -= c * hp * hp / den;
        k[1] += c * (hp * hp - hm * hm) / den;
    }
    for (auto& v : k) v = -v;
    return k;
}

}  // namespace detail

inline GeneratorMatrix assemble_generator(const SpectralProblem& p) {
    p.validate();
    const int nc = p.cells();
    const int ns = nc + 1;
    GeneratorMatrix g;
    g.problem = p;
    g.n_side = ns;
    const double h = p.h;
    const double snap = 1e-3 * h;  // nodes closer than this to the line count as boundary
    auto level = [&](int i, int j) { return g.x(i) - p.beta * g.y(j); };
    auto inside = [&](int i, int j) { return i > 0 && j > 0 && i < nc && j < nc && level(i, j) > snap; };

    std::vector<int> index(static_cast<std::size_t>(ns) * ns, -1);
    for (int j = 1; j < nc; ++j)
        for (int i = 1; i < nc; ++i)
            if (inside(i, j)) {
                index[static_cast<std::size_t>(j) * ns + i] = static_cast<int>(g.node_i.size());
                g.node_i.push_back(i);
                g.node_j.push_back(j);
            }
    const auto n = static_cast<Eigen::Index>(g.node_i.size());
    require(n > 0, ErrorKind::invalid_input, "no interior unknowns");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 5);
    bool refused = false;
    for (Eigen::Index r = 0; r < n; ++r) {
        const int i = g.node_i[static_cast<std::size_t>(r)];
        const int j = g.node_j[static_cast<std::size_t>(r)];
        const double lv = level(i, j);
        // x direction: moving left lowers x - beta y
        double hm = h, hp = h;
        int left = inside(i - 1, j) ? index[static_cast<std::size_t>(j) * ns + i - 1] : -1;
        if (left < 0 && i - 1 > 0 && level(i - 1, j) <= snap) hm = std::min(h, lv);
        int right = inside(i + 1, j) ? index[static_cast<std::size_t>(j) * ns + i + 1] : -1;
        const auto kx = detail::fd_row(hm, hp, -p.mu1 * g.x(i), p.scheme, refused);
        // y direction: the line is crossed moving up when beta > 0, down when beta < 0
        double km = h, kp = h;
        int down = inside(i, j - 1) ? index[static_cast<std::size_t>(j - 1) * ns + i] : -1;
        int up = inside(i, j + 1) ? index[static_cast<std::size_t>(j + 1) * ns + i] : -1;
        if (p.beta != 0.0) {
            const double dist = lv / std::abs(p.beta);
            if (p.beta > 0 && up < 0 && j + 1 < nc && level(i, j + 1) <= snap) kp = std::min(h, dist);
            if (p.beta < 0 && down < 0 && j - 1 > 0 && level(i, j - 1) <= snap) km = std::min(h, dist);
        }
        const auto ky = detail::fd_row(km, kp, -p.mu2 * g.y(j), p.scheme, refused);
        trip.emplace_back(r, r, kx[1] + ky[1]);
        if (left >= 0) trip.emplace_back(r, left, kx[0]);
        if (right >= 0) trip.emplace_back(r, right, kx[2]);
        if (down >= 0) trip.emplace_back(r, down, ky[0]);
        if (up >= 0) trip.emplace_back(r, up, ky[2]);
    }
    require(!refused, ErrorKind::invalid_input, "cell Peclet number > 2 with central drift; refine h or upwind");
    g.minus_generator.resize(n, n);
    g.minus_generator.setFromTriplets(trip.begin(), trip.end());
    g.minus_generator.makeCompressed();
    return g;
}

struct EigenResult {
    double lambda1 = 0.0;
    double residual = 0.0;
    double boundary_mass = 0.0;  // density-weighted |v| on the ring next to the box edge, relative to its max
    int iterations = 0;
    bool converged = false;
    std::vector<double> eigenvector;
};

/// Smallest eigenvalue of -L by inverse power iteration (one sparse LU factorization).
inline EigenResult principal_eigenvalue(const GeneratorMatrix& g, double tol = 1e-9, int max_iter = 500) {
    const auto& A = g.minus_generator;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    require(lu.info() == Eigen::Success, ErrorKind::no_convergence, "sparse LU factorization failed");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.rows());
    v.normalize();
    EigenResult res;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd w = lu.solve(v);
        w.normalize();
        if (w.sum() < 0) w = -w;
        const Eigen::VectorXd Aw = A * w;
        const double lambda = w.dot(Aw);
        res.residual = (Aw - lambda * w).norm();
        res.lambda1 = lambda;
        res.iterations = it;
        v = w;
        if (res.residual < tol * std::max(1.0, std::abs(lambda))) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged)
        throw Error(ErrorKind::no_convergence, "inverse iteration did not converge; last lambda = " +
                                                  std::to_string(res.lambda1) + ", residual " +
                                                  std::to_string(res.residual));
    // The forward eigenfunction is v times the Gaussian invariant density, which is what
    // feels the box truncation.
    double vmax = 0.0, edge = 0.0;
    const int nc = g.n_side - 1;
    const auto& p = g.problem;
    for (Eigen::Index r = 0; r < v.size(); ++r) {
        const double xi = g.x(g.node_i[static_cast<std::size_t>(r)]), yj = g.y(g.node_j[static_cast<std::size_t>(r)]);
        const double a = std::abs(v[r]) * std::exp(-p.mu1 * xi * xi - p.mu2 * yj * yj);
        vmax = std::max(vmax, a);
        const int i = g.node_i[static_cast<std::size_t>(r)], j = g.node_j[static_cast<std::size_t>(r)];
        if (i == 1 || j == 1 || i == nc - 1 || j == nc - 1) edge = std::max(edge, a);
    }
    res.boundary_mass = vmax > 0 ? edge / vmax : 0.0;
    res.eigenvector.assign(v.data(), v.data() + v.size());
    return res;
}

/// Convenience: assemble and solve.
inline EigenResult principal_eigenvalue(const SpectralProblem& p, double tol = 1e-9, int max_iter = 500) {
    return principal_eigenvalue(assemble_generator(p), tol, max_iter);
}

/// |lambda(L) - lambda(1.25 L)| with h kept fixed (L rounded to a multiple of h).
inline double truncation_sensitivity(const SpectralProblem& p, double tol = 1e-9) {
    SpectralProblem wide = p;
    wide.half_width = std::round(1.25 * p.half_width / p.h) * p.h;
    return std::abs(principal_eigenvalue(p, tol).lambda1 - principal_eigenvalue(wide, tol).lambda1);
}

/// Principal eigenvalue of -(sigma^2/2 u'' - mu x u') on (barrier, upper) with Dirichlet ends,
/// second-order finite differences and inverse iteration with a tridiagonal solve.
inline double ou_halfline_eigenvalue(double mu, double sigma, double barrier, double upper, double h) {
    require(mu > 0 && sigma > 0 && upper > barrier && h > 0, ErrorKind::invalid_input, "bad 1D problem");
    const int n = static_cast<int>(std::lround((upper - barrier) / h)) - 1;
    require(n >= 3, ErrorKind::invalid_input, "1D grid too coarse");
    const double D = 0.5 * sigma * sigma;
    std::vector<double> lo(n), di(n), up(n);
    for (int k = 0; k < n; ++k) {
        const double x = barrier + h * (k + 1);
        const double c = -mu * x;
        lo[k] = -(D / (h * h) - c / (2 * h));
        up[k] = -(D / (h * h) + c / (2 * h));
        di[k] = 2 * D / (h * h);
    }
    std::vector<double> v(n, 1.0), w(n), cp(n), dp(n);
    double lambda = 0.0;
    for (int it = 0; it < 2000; ++it) {
        // Thomas algorithm for A w = v
        cp[0] = up[0] / di[0];
        dp[0] = v[0] / di[0];
        for (int k = 1; k < n; ++k) {
            const double m = di[k] - lo[k] * cp[k - 1];
            cp[k] = up[k] / m;
            dp[k] = (v[k] - lo[k] * dp[k - 1]) / m;
        }
        w[n - 1] = dp[n - 1];
        for (int k = n - 2; k >= 0; --k) w[k] = dp[k] - cp[k] * w[k + 1];
        double vv = 0, vw = 0, ww = 0;
        for (int k = 0; k < n; ++k) {
            vv += v[k] * v[k];
            vw += v[k] * w[k];
            ww += w[k] * w[k];
        }
        const double next = vv / vw;
        const double norm = std::sqrt(ww);
        for (int k = 0; k < n; ++k) v[k] = w[k] / norm;
        if (it > 5 && std::abs(next - lambda) < 1e-13 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

inline void write_spectral_csv_header(std::ostream& os) { os << "mu1,mu2,beta,lambda1,residual,L,h\n"; }

inline void write_spectral_csv(std::ostream& os, const SpectralProblem& p, const EigenResult& r) {
    os << p.mu1 << "," << p.mu2 << "," << p.beta << "," << std::setprecision(12) << r.lambda1 << "," << r.residual
       << "," << p.half_width << "," << p.h << "\n";
}

struct AnnealedConfig {
    double dt = 1.0 / 64.0;
    std::size_t samples = 100000;
};

/// Unconditional survival of X above beta Y, both OU with sigma = 1, re-sampling the wall per
/// replica. Crossings between grid times are resolved by a Bernoulli draw with the bridge
/// probability of X - beta Y (variance rate 1 + beta^2). Zero survivors truncate the curve.
inline SurvivalCurve annealed_mc(double mu1, double mu2, double beta, double x0, double y0,
                                 const std::vector<double>& horizons, const EndWindow& window,
                                 const AnnealedConfig& cfg, RngStream stream) {
    require(x0 > beta * y0, ErrorKind::invalid_input, "need x0 > beta y0");
    require(!horizons.empty() && cfg.samples >= 1, ErrorKind::invalid_input, "need horizons and samples");
    const OuParams px{mu1, 1.0}, py{mu2, 1.0};
    px.validate();
    py.validate();
    const double dt = cfg.dt;
    std::vector<std::size_t> steps;
    for (double h : horizons) steps.push_back(static_cast<std::size_t>(std::llround(h / dt)));
    std::vector<std::size_t> survivors(horizons.size(), 0);
    const auto [dx_mean_unused, vx] = px.transition(0.0, dt);
    const auto [dy_mean_unused, vy] = py.transition(0.0, dt);
    (void)dx_mean_unused;
    (void)dy_mean_unused;
    const double ax = std::exp(-mu1 * dt), ay = std::exp(-mu2 * dt);
    const double sx = std::sqrt(vx), sy = std::sqrt(vy);
    const double bridge_var = (1.0 + beta * beta) * dt;
    Rng rng(stream);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        double x = x0, y = y0;
        std::size_t k = 0;
        bool alive = true;
        for (std::size_t h = 0; h < steps.size() && alive; ++h) {
            for (; k < steps[h]; ++k) {
                const double d0 = x - beta * y;
                x = ax * x + sx * rng.normal();
                y = ay * y + sy * rng.normal();
                const double d1 = x - beta * y;
                if (d1 < 0.0 || !rng.bernoulli(bridge_noncrossing(d0, d1, 1.0, bridge_var))) {
                    alive = false;
                    break;
                }
            }
            if (alive && window.contains(x, beta * y, x0, horizons[h])) ++survivors[h];
        }
    }
    SurvivalCurve c;
    c.seed = stream.seed;
    c.wall_id = stream.stream;
    const double n = static_cast<double>(cfg.samples);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        if (survivors[h] == 0) break;
        const double p = static_cast<double>(survivors[h]) / n;
        c.add({horizons[h], std::log(p), std::sqrt((1.0 - p) / (n * p)), "annealed-mc", false, ""});
    }
    return c;
}

}  // namespace persist
