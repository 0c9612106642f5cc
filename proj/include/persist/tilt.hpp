#pragma once

// Exponential tilting of step laws, the first-order tilted-mean check, the
// tilted importance sampler for fast growth of environment walks, and the
// Gaussian tail bracket.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "persist/environment.hpp"
#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/rng.hpp"
#include "persist/step_law.hpp"

namespace persist {

/// Law with density e^{theta x} / psi(theta) against the base law.
struct TiltedLaw {
    StepLaw base;
    double theta = 0.0;
    double log_psi = 0.0;
    StepLaw law;

    double sample(Rng& rng) const { return law.sample(rng); }
    double mean() const { return law.mean(); }
};

inline double log_mgf(const StepLaw& law, double theta) {
    if (law.is_gaussian()) {
        const auto& g = law.as_gaussian();
        return theta * g.mean + 0.5 * theta * theta * g.sd * g.sd;
    }
    const auto& d = law.as_discrete();
    double mx = neg_inf;
    for (double v : d.values) mx = std::max(mx, theta * v);
    double s = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) s += d.probs[i] * std::exp(theta * d.values[i] - mx);
    return mx + std::log(s);
}

/// theta_max: every supported family has a finite MGF everywhere, so the guard is the
/// configured C1/2 from the uniform exponential-moment assumption.
inline TiltedLaw tilt(const StepLaw& base, double theta, double theta_max = pos_inf) {
    require(std::isfinite(theta) && std::abs(theta) <= theta_max, ErrorKind::invalid_tilt,
            "theta outside the admissible tilt region");
    TiltedLaw t{base, theta, log_mgf(base, theta), base};
    if (theta == 0.0) return t;
    if (base.is_gaussian()) {
        const auto& g = base.as_gaussian();
        t.law = StepLaw::gaussian(g.mean + theta * g.sd * g.sd, g.sd);
    } else {
        auto d = base.as_discrete();
        for (std::size_t i = 0; i < d.values.size(); ++i) d.probs[i] *= std::exp(theta * d.values[i] - t.log_psi);
        double s = 0;
        for (double p : d.probs) s += p;
        for (double& p : d.probs) p /= s;
        t.law = StepLaw(d);
    }
    return t;
}

/// E[g(X)] over the law: exact sum for discrete laws, trapezoid rule on mean +- 40 sd for
/// Gaussians.
template <class F>
double law_expectation(const StepLaw& law, F g) {
    if (law.is_discrete()) {
        const auto& d = law.as_discrete();
        double s = 0;
        for (std::size_t i = 0; i < d.values.size(); ++i) s += d.probs[i] * g(d.values[i]);
        return s;
    }
    const auto& gl = law.as_gaussian();
    const int n = 16000;
    const double lo = gl.mean - 40 * gl.sd, h = 80 * gl.sd / n;
    double s = 0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + h * i;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s += w * normal_pdf((x - gl.mean) / gl.sd) / gl.sd * g(x);
    }
    return s * h;
}

struct TiltBracketRow {
    double theta = 0.0;
    double m = 0.0;          // tilted mean
    double deviation = 0.0;  // |m - theta E X^2|
    double bound = 0.0;      // K theta^2
    bool ok = false;
};

struct TiltBracketReport {
    std::string family;
    double second_moment = 0.0;
    double K = 0.0;
    double theta_max = 0.0;
    double c_lo = 0.0, c_hi = 0.0;  // envelope of m / (theta E X^2)
    std::vector<TiltBracketRow> rows;
    bool pass = false;
};

/// For a centered law: |m(theta) - theta E X^2| <= K theta^2 on 0 < theta <= theta_max with
///   K = E[|X|^3 e^{tm|X|}]/2 + tm E[X^2] E[X^2 e^{tm|X|}]/2,   tm = theta_max,
/// which follows from Taylor bounds on E[X e^{theta X}] and on psi >= 1.
inline TiltBracketReport tilted_mean_bracket_check(const StepLaw& base, const std::vector<double>& thetas,
                                                   double c1 = 1.0) {
    require(std::abs(base.mean()) < 1e-12, ErrorKind::invalid_tilt, "tilted-mean check needs a centered law");
    require(c1 > 0, ErrorKind::invalid_input, "C1 must be positive");
    TiltBracketReport rep;
    rep.family = base.describe();
    rep.theta_max = c1 / 2;
    const double tm = rep.theta_max;
    rep.second_moment = base.variance();
    const double a3 = law_expectation(base, [&](double x) { return std::pow(std::abs(x), 3) * std::exp(tm * std::abs(x)); });
    const double a2 = law_expectation(base, [&](double x) { return x * x * std::exp(tm * std::abs(x)); });
    rep.K = 0.5 * a3 + 0.5 * tm * rep.second_moment * a2;
    rep.c_lo = pos_inf;
    rep.c_hi = neg_inf;
    rep.pass = !thetas.empty();
    for (double th : thetas) {
        require(th > 0 && th <= tm, ErrorKind::invalid_tilt, "theta outside (0, C1/2]");
        TiltBracketRow r;
        r.theta = th;
        r.m = tilt(base, th).mean();
        r.deviation = std::abs(r.m - th * rep.second_moment);
        r.bound = rep.K * th * th;
        r.ok = r.deviation <= r.bound;
        rep.pass = rep.pass && r.ok;
        const double c = r.m / (th * rep.second_moment);
        rep.c_lo = std::min(rep.c_lo, c);
        rep.c_hi = std::max(rep.c_hi, c);
        rep.rows.push_back(r);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// fast growth by tilted importance sampling

enum class TiltSchedule {
    decaying,  // b_n = theta0 n^{-1/2} log log n, clipped at 0
    constant,  // b_n = theta0 N^{-1/2} log log N for every n
    none       // plain Monte Carlo
};

inline double schedule_tilt(TiltSchedule s, double theta0, std::size_t n, std::size_t N) {
    auto b = [&](double k) {
        if (k < 3.0) return 0.0;  // log log k <= 0 below e
        return std::max(0.0, theta0 * std::log(std::log(k)) / std::sqrt(k));
    };
    switch (s) {
        case TiltSchedule::decaying: return b(static_cast<double>(n));
        case TiltSchedule::constant: return b(static_cast<double>(N));
        case TiltSchedule::none: return 0.0;
    }
    return 0.0;
}

struct GrowthEstimate {
    double logp = neg_inf;
    double stderr_ = 0.0;  // of the estimate relative to itself (log scale)
    double ess = 0.0;
    double level = 0.0;    // c sqrt(N) log log N
    std::size_t hits = 0;
    bool unreliable = false;
};

/// P(B_N >= c sqrt(N) log log N | environment) where B is the centered environment walk. Steps
/// are drawn from the per-step laws tilted by b_n and reweighted by the likelihood ratio.
inline GrowthEstimate fast_growth_estimate(const std::vector<StepLaw>& laws, std::size_t N, double c,
                                           std::size_t samples, RngStream stream,
                                           TiltSchedule schedule = TiltSchedule::decaying, double theta0 = 1.0) {
    require(N >= 1 && N <= laws.size(), ErrorKind::invalid_input, "need N laws");
    require(samples >= 1, ErrorKind::invalid_input, "need samples");
    std::vector<TiltedLaw> tl;
    std::vector<double> means;
    tl.reserve(N);
    for (std::size_t n = 1; n <= N; ++n) {
        tl.push_back(tilt(laws[n - 1], schedule_tilt(schedule, theta0, n, N)));
        means.push_back(laws[n - 1].mean());
    }
    GrowthEstimate est;
    const double dN = static_cast<double>(N);
    est.level = N >= 3 ? c * std::sqrt(dN) * std::log(std::log(dN)) : 0.0;
    Rng rng(stream);
    std::vector<double> logw;
    for (std::size_t s = 0; s < samples; ++s) {
        double b = 0, lw = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const double x = tl[n].sample(rng);
            b += x - means[n];
            lw += tl[n].log_psi - tl[n].theta * x;
        }
        if (b >= est.level) logw.push_back(lw);
    }
    est.hits = logw.size();
    if (logw.empty()) {
        est.unreliable = true;
        return est;
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    double s1 = 0, s2 = 0;
    for (double l : logw) {
        const double w = std::exp(l - mx);
        s1 += w;
        s2 += w * w;
    }
    const double n = static_cast<double>(samples);
    est.logp = mx + std::log(s1 / n);
    est.ess = s1 * s1 / s2;
    const double mean = s1 / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    est.stderr_ = std::sqrt(var / n) / mean;
    est.unreliable = est.ess < 10.0;
    return est;
}

// ---------------------------------------------------------------------------

/// x/(1+x^2) phi(x) <= P(Z >= x) <= phi(x)/x for x > 0.
inline std::pair<double, double> gaussian_tail_bounds(double x) {
    require(x > 0 && std::isfinite(x), ErrorKind::invalid_input, "tail bounds need x > 0");
    const double phi = normal_pdf(x);
    return {x / (1 + x * x) * phi, phi / x};
}

}  // namespace persist
