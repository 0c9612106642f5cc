#pragma once

// Regression of survival curves into exponents, aggregation across quenched
// walls, and the qualitative checks built on top (symmetry, convexity,
// ratio invariance, relevance of disorder).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/rng.hpp"
#include "persist/survival.hpp"

namespace persist {

enum class FitScale { log_time, time };

inline const char* to_string(FitScale s) { return s == FitScale::log_time ? "log-time" : "time"; }

/// Horizon range [lo, hi] used by a fit; the default drops the lower third of the curve.
struct FitWindow {
    double lo = 0.0;
    double hi = pos_inf;
    bool automatic = true;

    static FitWindow lower_third_dropped() { return {}; }
    static FitWindow between(double lo, double hi) { return {lo, hi, false}; }
};

struct ExponentFit {
    double gamma_hat = 0.0;
    double stderr_ = 0.0;
    FitScale scale = FitScale::log_time;
    double n_min = 0.0, n_max = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
    bool infeasible = false;  // a -inf entry in the window: the exponent is +inf
    std::string note;
};

namespace detail {

struct WlsResult {
    double slope = 0.0, intercept = 0.0, slope_se = 0.0, r2 = 0.0;
};

inline WlsResult wls(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
        syy += w[i] * (y[i] - my) * (y[i] - my);
    }
    WlsResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - r.intercept - r.slope * x[i];
        rss += w[i] * e * e;
    }
    r.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
    const double dof = static_cast<double>(x.size()) - 2.0;
    r.slope_se = dof > 0 ? std::sqrt(rss / dof / sxx) : 0.0;
    return r;
}

}  // namespace detail

/// Weighted least squares of -log p against log N (or N). Weights are 1/stderr^2 unless some
/// entry is deterministic (stderr 0), in which case all weights are 1. The reported stderr is
/// the residual-based slope standard error.
inline ExponentFit fit_exponent(const SurvivalCurve& curve, FitScale scale, FitWindow window = {}) {
    std::vector<const SurvivalPoint*> pts;
    if (window.automatic) {
        const std::size_t from = curve.size() / 3;
        for (std::size_t i = from; i < curve.size(); ++i) pts.push_back(&curve.entries[i]);
    } else {
        for (const auto& e : curve.entries)
            if (e.horizon >= window.lo && e.horizon <= window.hi) pts.push_back(&e);
    }
    ExponentFit fit;
    fit.scale = scale;
    fit.points = pts.size();
    if (!pts.empty()) {
        fit.n_min = pts.front()->horizon;
        fit.n_max = pts.back()->horizon;
    }
    for (const auto* p : pts)
        if (p->logp == neg_inf) {
            fit.infeasible = true;
            fit.gamma_hat = pos_inf;
            fit.note = "survival probability is zero in the window";
            return fit;
        }
    require(pts.size() >= 4, ErrorKind::invalid_input, "exponent fit needs at least 4 points in the window");
    bool unit = false;
    for (const auto* p : pts) unit = unit || !(p->stderr_ > 0.0);
    std::vector<double> x, y, w;
    for (const auto* p : pts) {
        require(std::isfinite(p->logp), ErrorKind::invalid_input, "non-finite log-probability");
        x.push_back(scale == FitScale::log_time ? std::log(p->horizon) : p->horizon);
        y.push_back(-p->logp);
        w.push_back(unit ? 1.0 : 1.0 / (p->stderr_ * p->stderr_));
    }
    const auto r = detail::wls(x, y, w);
    fit.gamma_hat = r.slope;
    fit.stderr_ = r.slope_se;
    fit.r2 = r.r2;
    return fit;
}

/// Refit with the lower end of the window doubled; flags the fit when gamma moves by more than
/// its stderr (pre-asymptotic).
inline bool window_robust(const SurvivalCurve& curve, const ExponentFit& fit, double slack = 0.0) {
    if (fit.infeasible || fit.points < 5) return false;
    const auto again = fit_exponent(curve, fit.scale, FitWindow::between(2.0 * fit.n_min, fit.n_max));
    return std::abs(again.gamma_hat - fit.gamma_hat) <= std::max(fit.stderr_, slack);
}

struct QuenchedAggregate {
    std::vector<ExponentFit> fits;
    double mean = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // bootstrap interval widened by the systematic term
    double boot_lo = 0.0, boot_hi = 0.0;
    double systematic = 0.0;          // finite-horizon standard error shared by all walls
    double sd = 0.0;
    std::size_t n_walls = 0;   // fits used
    std::size_t excluded = 0;  // infeasible fits left out

    bool overlaps(const QuenchedAggregate& o) const { return ci_lo <= o.ci_hi && o.ci_lo <= ci_hi; }
    double half_width() const { return 0.5 * (ci_hi - ci_lo); }
};

inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - f) + v[i + 1] * f : v[i];
}

/// Mean over walls with a percentile-bootstrap 95% interval. Infeasible fits are excluded and
/// counted. With one usable fit the bootstrap interval is degenerate. A systematic standard
/// error (see mean_curve_systematic) widens each side in quadrature: it does not average out
/// over walls, so the bootstrap cannot see it.
inline QuenchedAggregate aggregate_quenched(const std::vector<ExponentFit>& fits, std::size_t resamples = 1000,
                                            RngStream stream = {0x5eed, 0}, double systematic = 0.0) {
    QuenchedAggregate agg;
    agg.fits = fits;
    std::vector<double> g;
    for (const auto& f : fits) {
        if (f.infeasible)
            ++agg.excluded;
        else
            g.push_back(f.gamma_hat);
    }
    require(!g.empty(), ErrorKind::invalid_input, "no feasible fits to aggregate");
    agg.n_walls = g.size();
    agg.mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    double ss = 0;
    for (double v : g) ss += (v - agg.mean) * (v - agg.mean);
    agg.sd = g.size() > 1 ? std::sqrt(ss / static_cast<double>(g.size() - 1)) : 0.0;
    agg.boot_lo = agg.boot_hi = agg.mean;
    if (g.size() > 1 && agg.sd > 0.0) {
        Rng rng(stream);
        std::vector<double> means(resamples);
        const auto n = static_cast<double>(g.size());
        for (auto& m : means) {
            double s = 0;
            for (std::size_t i = 0; i < g.size(); ++i) s += g[static_cast<std::size_t>(rng.uniform() * n)];
            m = s / n;
        }
        agg.boot_lo = std::min(agg.mean, percentile(means, 0.025));
        agg.boot_hi = std::max(agg.mean, percentile(means, 0.975));
    }
    agg.systematic = systematic;
    const double z = 1.959963984540054 * systematic;
    agg.ci_lo = agg.mean - std::hypot(agg.mean - agg.boot_lo, z);
    agg.ci_hi = agg.mean + std::hypot(agg.boot_hi - agg.mean, z);
    return agg;
}

/// Lack-of-fit slope stderr of the quenched-mean curve (mean of log p over walls at shared
/// horizons). Wall-specific wiggles average out; curvature common to every wall does not, and
/// that curvature is the finite-horizon bias of the fitted slope. Smooth curvature leaves small
/// residuals, so the drift of the slope when the window's lower end is doubled is added in
/// quadrature. Returns 0 when the curves do not share horizons or contain -inf.
inline double mean_curve_systematic(const std::vector<SurvivalCurve>& curves, FitScale scale, FitWindow window = {}) {
    if (curves.empty()) return 0.0;
    SurvivalCurve mean;
    const auto& ref = curves.front().entries;
    for (const auto& c : curves) {
        if (c.size() != ref.size()) return 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i)
            if (c.entries[i].horizon != ref[i].horizon || !std::isfinite(c.entries[i].logp)) return 0.0;
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
        SurvivalPoint p;
        p.horizon = ref[i].horizon;
        for (const auto& c : curves) p.logp += c.entries[i].logp;
        p.logp /= static_cast<double>(curves.size());
        mean.add(p);
    }
    std::size_t in = 0;
    for (const auto& e : mean.entries) in += window.automatic || (e.horizon >= window.lo && e.horizon <= window.hi);
    if ((window.automatic ? mean.size() - mean.size() / 3 : in) < 4) return 0.0;
    const auto fit = fit_exponent(mean, scale, window);
    double drift = 0.0;
    if (fit.points >= 5) {
        const auto upper = fit_exponent(mean, scale, FitWindow::between(2.0 * fit.n_min, fit.n_max));
        if (upper.points >= 4) drift = std::abs(upper.gamma_hat - fit.gamma_hat);
    }
    return std::hypot(fit.stderr_, drift);
}

struct SpreadPoint {
    double horizon = 0.0;
    double sd = 0.0;  // across-wall sd of log p / log N (or log p / N on the time scale)
};

/// Across-wall spread of the normalized log-probability at each shared horizon. It should decay
/// as the horizon grows; reported, not gated. Empty when the curves do not share finite entries.
inline std::vector<SpreadPoint> normalized_spread(const std::vector<SurvivalCurve>& curves, FitScale scale) {
    std::vector<SpreadPoint> out;
    if (curves.size() < 2) return out;
    const auto& ref = curves.front().entries;
    for (const auto& c : curves) {
        if (c.size() != ref.size()) return {};
        for (std::size_t i = 0; i < ref.size(); ++i)
            if (c.entries[i].horizon != ref[i].horizon || !std::isfinite(c.entries[i].logp)) return {};
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double h = ref[i].horizon;
        const double norm = scale == FitScale::log_time ? std::log(h) : h;
        if (!(norm > 0.0)) continue;
        double s = 0, s2 = 0;
        for (const auto& c : curves) {
            const double v = c.entries[i].logp / norm;
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(curves.size());
        const double var = std::max(0.0, (s2 - s * s / n) / (n - 1));
        out.push_back({h, std::sqrt(var)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// beta scans

struct BetaRow {
    double beta = 0.0;
    QuenchedAggregate agg;
};

struct BetaScan {
    std::vector<BetaRow> rows;
    std::optional<bool> symmetric;  // every +-beta pair overlaps
    std::optional<bool> convex;     // every symmetric midpoint triple passes
    std::optional<bool> monotone;   // means increase on beta >= 0
    std::optional<bool> separated_0_1;

    const BetaRow* find(double b) const {
        for (const auto& r : rows)
            if (std::abs(r.beta - b) < 1e-12) return &r;
        return nullptr;
    }
};

/// Midpoint convexity test with slack = pooled CI half-widths of the three points.
inline bool midpoint_convex(const QuenchedAggregate& left, const QuenchedAggregate& mid,
                            const QuenchedAggregate& right) {
    const double slack = std::sqrt(mid.half_width() * mid.half_width() +
                                   0.25 * (left.half_width() * left.half_width() +
                                           right.half_width() * right.half_width()));
    return mid.mean <= 0.5 * (left.mean + right.mean) + slack;
}

inline BetaScan scan_beta(const std::vector<double>& betas, const std::function<QuenchedAggregate(double)>& run) {
    BetaScan scan;
    for (double b : betas) scan.rows.push_back({b, run(b)});
    std::sort(scan.rows.begin(), scan.rows.end(), [](const BetaRow& a, const BetaRow& b) { return a.beta < b.beta; });
    if (scan.rows.size() < 2) return scan;

    bool any_pair = false, sym = true;
    for (const auto& r : scan.rows)
        if (r.beta > 0)
            if (const auto* m = scan.find(-r.beta)) {
                any_pair = true;
                sym = sym && r.agg.overlaps(m->agg);
            }
    if (any_pair) scan.symmetric = sym;

    bool any_triple = false, cvx = true;
    for (std::size_t i = 0; i < scan.rows.size(); ++i)
        for (std::size_t k = i + 2; k < scan.rows.size(); ++k)
            if (const auto* mid = scan.find(0.5 * (scan.rows[i].beta + scan.rows[k].beta))) {
                any_triple = true;
                cvx = cvx && midpoint_convex(scan.rows[i].agg, mid->agg, scan.rows[k].agg);
            }
    if (any_triple) scan.convex = cvx;

    std::vector<const BetaRow*> pos;
    for (const auto& r : scan.rows)
        if (r.beta >= 0) pos.push_back(&r);
    if (pos.size() >= 2) {
        bool mono = true;
        for (std::size_t i = 1; i < pos.size(); ++i) mono = mono && pos[i]->agg.mean > pos[i - 1]->agg.mean;
        scan.monotone = mono;
    }
    const auto* z = scan.find(0.0);
    const auto* one = scan.find(1.0);
    if (z && one) scan.separated_0_1 = one->agg.ci_lo > z->agg.ci_hi;
    return scan;
}

// ---------------------------------------------------------------------------
// comparison reports

struct ComparisonReport {
    double a_mean = 0.0, b_mean = 0.0;
    double a_lo = 0.0, a_hi = 0.0, b_lo = 0.0, b_hi = 0.0;
    bool pass = false;
};

/// Ratio invariance: the environment walk at variance ratio rho^2 against the Brownian
/// wall at beta = rho. Pass iff the intervals overlap.
inline ComparisonReport ratio_invariance_check(const QuenchedAggregate& walk, const QuenchedAggregate& brownian) {
    return {walk.mean, brownian.mean, walk.ci_lo, walk.ci_hi, brownian.ci_lo, brownian.ci_hi,
            walk.overlaps(brownian)};
}

/// Parameters an exponent refers to; used to refuse comparisons across different models.
struct ModelTag {
    std::string process;  // "bm" or "ou"
    double mu1 = 0.0, mu2 = 0.0;
    double beta = 0.0;

    bool matches(const ModelTag& o) const {
        return process == o.process && std::abs(mu1 - o.mu1) < 1e-12 && std::abs(mu2 - o.mu2) < 1e-12 &&
               std::abs(beta - o.beta) < 1e-12;
    }
};

struct RelevanceVerdict {
    double quenched_lo = 0.0;
    double quenched_mean = 0.0;
    double annealed = 0.0;
    bool relevant = false;        // quenched lower bound strictly above annealed
    bool consistent_equal = false;  // annealed inside the quenched interval
};

inline RelevanceVerdict disorder_relevance_report(const QuenchedAggregate& quenched, const ModelTag& qtag,
                                                  double annealed, const ModelTag& atag) {
    require(qtag.matches(atag), ErrorKind::mismatched_parameters, "quenched and annealed parameters differ");
    RelevanceVerdict v;
    v.quenched_lo = quenched.ci_lo;
    v.quenched_mean = quenched.mean;
    v.annealed = annealed;
    v.relevant = quenched.ci_lo > annealed;
    v.consistent_equal = quenched.ci_lo <= annealed && annealed <= quenched.ci_hi;
    return v;
}

struct JensenCheck {
    double mean_neg_log = 0.0;  // mean over walls of -log p
    double neg_log_mean = 0.0;  // -log of the mean of p
    bool holds = false;
};

/// Empirical Jensen: mean(-log p_i) >= -log(mean p_i), exactly on the sample (computed stably).
inline JensenCheck jensen_check(const std::vector<double>& logps) {
    require(!logps.empty(), ErrorKind::invalid_input, "empty sample");
    JensenCheck j;
    double mx = neg_inf, s = 0;
    for (double l : logps) {
        mx = std::max(mx, l);
        s += -l;
    }
    j.mean_neg_log = s / static_cast<double>(logps.size());
    if (mx == neg_inf) {
        j.neg_log_mean = pos_inf;
        j.holds = j.mean_neg_log == pos_inf;
        return j;
    }
    double acc = 0;
    for (double l : logps) acc += std::exp(l - mx);
    j.neg_log_mean = -(mx + std::log(acc / static_cast<double>(logps.size())));
    // rounding guard only; identical samples give equality
    j.holds = j.mean_neg_log >= j.neg_log_mean - 1e-12 * std::max(1.0, std::abs(j.neg_log_mean));
    return j;
}

}  // namespace persist
