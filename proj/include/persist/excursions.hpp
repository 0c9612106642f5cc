#pragma once

// Macroscopic-excursion decomposition of an OU wall and the block log-costs
// q_{m,n} built on it. Block boundaries rho_i are returns to 0 that follow a
// visit to |Y| = threshold; tau_i is the start of the excursion that makes the
// visit. Crossing times are located by linear interpolation; the engine works
// on the first grid index at or after each rho_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/grid_engine.hpp"
#include "persist/paths.hpp"
#include "persist/survival.hpp"
#include "persist/walls.hpp"

namespace persist {

struct ExcursionDecomposition {
    std::vector<double> rho;              // rho_0 = 0 < rho_1 < ... (one more than excursions)
    std::vector<std::size_t> rho_index;   // first grid index >= rho_i
    std::vector<double> tau;              // tau_i in (rho_i, rho_{i+1})
    std::vector<double> r;                // r_i = rho_{i+1} - rho_i
    std::vector<double> maxima;           // M^i = sup of Y^i
    std::vector<PathSample> segments;     // Y^i(t) = Y(t + rho_i), t in [0, r_i]
    double threshold = 1.0;
    std::string warning;

    std::size_t count() const { return r.size(); }

    double mean_duration() const {
        return r.empty() ? 0.0 : std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    }
};

namespace detail {
inline double zero_crossing(double t0, double y0, double t1, double y1) {
    if (y0 == y1) return t0;
    return t0 + (t1 - t0) * (y0 / (y0 - y1));
}
inline double level_crossing(double t0, double y0, double t1, double y1, double level) {
    return t0 + (t1 - t0) * ((level - std::abs(y0)) / (std::abs(y1) - std::abs(y0)));
}
}  // namespace detail

inline ExcursionDecomposition decompose(const PathSample& wall, double threshold = 1.0) {
    require(threshold > 0.0, ErrorKind::invalid_input, "threshold must be > 0");
    require(wall.size() >= 2, ErrorKind::invalid_input, "wall path too short");
    const auto ts = wall.grid.times();
    const auto& y = wall.values;
    ExcursionDecomposition d;
    d.threshold = threshold;

    // locate the first zero if the path does not start there
    std::size_t k = 0;
    double rho = ts[0];
    if (y[0] != 0.0) {
        while (k + 1 < y.size() && y[k] * y[k + 1] > 0.0) ++k;
        if (k + 1 >= y.size()) {
            d.warning = "path has no zero";
            return d;
        }
        rho = detail::zero_crossing(ts[k], y[k], ts[k + 1], y[k + 1]);
        ++k;
    }
    d.rho.push_back(rho);
    d.rho_index.push_back(k);

    while (true) {
        // last zero before the threshold visit, and the visit itself
        double last_zero = rho;
        std::size_t j = k;
        bool hit = false;
        double t_hit = 0.0;
        for (; j + 1 < y.size(); ++j) {
            if (y[j] == 0.0 || y[j] * y[j + 1] < 0.0) {
                const double z = y[j] == 0.0 ? ts[j] : detail::zero_crossing(ts[j], y[j], ts[j + 1], y[j + 1]);
                if (z > rho) last_zero = z;
            }
            if (std::abs(y[j + 1]) >= threshold) {
                t_hit = std::abs(y[j]) >= threshold ? ts[j]
                                                    : detail::level_crossing(ts[j], y[j], ts[j + 1], y[j + 1], threshold);
                hit = true;
                ++j;
                break;
            }
        }
        if (!hit) break;
        // first return to zero after the visit
        bool back = false;
        double next_rho = 0.0;
        for (; j + 1 < y.size(); ++j) {
            if (y[j + 1] == 0.0 || y[j] * y[j + 1] < 0.0) {
                next_rho = detail::zero_crossing(ts[j], y[j], ts[j + 1], y[j + 1]);
                back = true;
                break;
            }
        }
        if (!back) break;
        (void)t_hit;
        const std::size_t next_index = j + 1;

        PathSample seg;
        std::vector<double> st{0.0}, sv{0.0};
        double mx = 0.0;
        for (std::size_t i = k; i <= j; ++i) {
            if (ts[i] <= rho) continue;
            st.push_back(ts[i] - rho);
            sv.push_back(y[i]);
            mx = std::max(mx, y[i]);
        }
        if (next_rho - rho > st.back()) {
            st.push_back(next_rho - rho);
            sv.push_back(0.0);
        }
        seg.grid = TimeGrid(std::move(st));
        seg.values = std::move(sv);

        d.tau.push_back(last_zero);
        d.r.push_back(next_rho - rho);
        d.maxima.push_back(mx);
        d.segments.push_back(std::move(seg));
        d.rho.push_back(next_rho);
        d.rho_index.push_back(next_index);
        rho = next_rho;
        k = next_index;
    }
    if (d.r.empty()) d.warning = "no complete excursion within the horizon";
    return d;
}

inline void write_decomposition_csv(std::ostream& os, const ExcursionDecomposition& d) {
    os << "i,rho_i,tau_i,r_i,M_i\n";
    for (std::size_t i = 0; i < d.count(); ++i)
        os << i << "," << d.rho[i] << "," << d.tau[i] << "," << d.r[i] << "," << d.maxima[i] << "\n";
}

struct BlockLogProb {
    std::size_t m = 0, n = 0;
    double q = 0.0;  // -log p_{m,n}; +inf when the engine dies
};

/// Start interval I = (a, b) for block costs; the end condition is X_{rho_n} >= a (and < b).
struct BlockInterval {
    double a = 0.5;
    double b = pos_inf;
    int start_points = 9;  // starting grid for the infimum when b is finite
};

namespace detail {
inline double block_log_survival(const WallRealization& wall, const ExcursionDecomposition& d, std::size_t m,
                                 std::size_t n, double start, const BlockInterval& I, const GridConfig& cfg) {
    GridRun run(wall, cfg, start, d.rho_index[m]);
    run.advance_to(d.rho_index[n]);
    return run.density().log_mass_where([&](double x) { return x >= I.a && x < I.b; });
}
}  // namespace detail

/// q_{m,n} from the worst admissible start: x = a when b = inf (survival is monotone in the
/// start), otherwise the minimum over a grid of starts in [a, b).
inline BlockLogProb block_logprob(const WallRealization& wall, const ExcursionDecomposition& d, std::size_t m,
                                  std::size_t n, const BlockInterval& I, const GridConfig& cfg) {
    require(n > m, ErrorKind::invalid_input, "block needs n > m");
    require(n < d.rho_index.size(), ErrorKind::out_of_range, "block beyond decomposition");
    require(I.a < I.b, ErrorKind::invalid_input, "interval needs a < b");
    double worst = pos_inf;
    if (I.b == pos_inf) {
        worst = detail::block_log_survival(wall, d, m, n, I.a, I, cfg);
    } else {
        const int k = std::max(2, I.start_points);
        for (int i = 0; i < k; ++i) {
            const double x = I.a + (I.b - I.a) * static_cast<double>(i) / static_cast<double>(k);
            worst = std::min(worst, detail::block_log_survival(wall, d, m, n, x, I, cfg));
        }
    }
    return {m, n, worst == neg_inf ? pos_inf : -worst};
}

/// q_{m,n} for n = m+1..n_max from a single run started at x = a (b = inf only).
inline std::vector<BlockLogProb> block_logprob_row(const WallRealization& wall, const ExcursionDecomposition& d,
                                                   std::size_t m, std::size_t n_max, const BlockInterval& I,
                                                   const GridConfig& cfg) {
    require(I.b == pos_inf, ErrorKind::invalid_input, "row evaluation needs b = inf");
    require(n_max < d.rho_index.size() && n_max > m, ErrorKind::out_of_range, "block beyond decomposition");
    GridRun run(wall, cfg, I.a, d.rho_index[m]);
    std::vector<BlockLogProb> out;
    for (std::size_t n = m + 1; n <= n_max; ++n) {
        run.advance_to(d.rho_index[n]);
        const double lp = run.density().log_mass_where([&](double x) { return x >= I.a; });
        out.push_back({m, n, lp == neg_inf ? pos_inf : -lp});
    }
    return out;
}

struct KingmanTrend {
    std::vector<std::size_t> n;
    std::vector<double> q;          // q_{0,n}
    std::vector<double> q_over_n;
    std::vector<double> cesaro;     // running mean of q_{0,k}/k
    std::vector<double> rho;        // rho_n
    double gamma_tilde = 0.0;       // slope of q_{0,n} against n
    double mean_duration = 0.0;     // E r_1 estimate
    double rate_per_time = 0.0;     // slope of q_{0,n} against rho_n
    bool partial = false;
};

namespace detail {
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t from) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double cnt = 0;
    for (std::size_t i = from; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        cnt += 1;
    }
    const double den = cnt * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (cnt * sxy - sx * sy) / den;
}
}  // namespace detail

/// One pass from rho_0 with X_0 = a, reading q_{0,n} at each requested n. The first third of
/// the n list is excluded from the slopes.
inline KingmanTrend kingman_trend(const WallRealization& wall, const ExcursionDecomposition& d,
                                  const GridConfig& cfg, std::vector<std::size_t> ns, const BlockInterval& I = {}) {
    require(!ns.empty(), ErrorKind::invalid_input, "empty n list");
    std::sort(ns.begin(), ns.end());
    KingmanTrend out;
    const std::size_t available = d.count();
    if (ns.back() > available) {
        out.partial = true;
        while (!ns.empty() && ns.back() > available) ns.pop_back();
    }
    GridRun run(wall, cfg, I.a, d.rho_index[0]);
    double ces = 0.0;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const std::size_t n = ns[k];
        require(n >= 1, ErrorKind::invalid_input, "n must be >= 1");
        run.advance_to(d.rho_index[n]);
        const double lp = run.density().log_mass_where([&](double x) { return x >= I.a && x < I.b; });
        const double q = lp == neg_inf ? pos_inf : -lp;
        out.n.push_back(n);
        out.q.push_back(q);
        out.q_over_n.push_back(q / static_cast<double>(n));
        ces += q / static_cast<double>(n);
        out.cesaro.push_back(ces / static_cast<double>(k + 1));
        out.rho.push_back(d.rho[n] - d.rho[0]);
    }
    if (out.n.size() >= 2) {
        std::vector<double> nn(out.n.begin(), out.n.end());
        const std::size_t from = out.n.size() / 3;
        out.gamma_tilde = detail::ols_slope(nn, out.q, from);
        out.rate_per_time = detail::ols_slope(out.rho, out.q, from);
    } else if (!out.n.empty()) {
        out.gamma_tilde = out.q_over_n.back();
        out.rate_per_time = out.q.back() / out.rho.back();
    }
    out.mean_duration = d.mean_duration();
    return out;
}

}  // namespace persist
