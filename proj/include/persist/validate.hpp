#pragma once

// The property suite behind `persist validate` and the acceptance binary.
// Every check uses fixed seeds, so a given build always reports the same
// numbers.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "persist/config.hpp"
#include "persist/excursions.hpp"
#include "persist/experiment.hpp"
#include "persist/exponent.hpp"
#include "persist/grid_engine.hpp"
#include "persist/oracle.hpp"
#include "persist/particles.hpp"
#include "persist/spectral.hpp"
#include "persist/tilt.hpp"

namespace persist {

enum class ValidationLevel { quick, full };

struct CriterionResult {
    int id = 0;  // 0 for checks outside the numbered acceptance list
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {
inline std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << std::fixed << v;
    return os.str();
}
inline std::string fmt_ci(const QuenchedAggregate& a) {
    return fmt(a.mean) + " [" + fmt(a.ci_lo) + ", " + fmt(a.ci_hi) + "]";
}
}  // namespace detail

/// Runs the suite; the shared experiments (Brownian walls at several beta, the OU Kingman run) are
/// computed once and reused by the criteria that compare them.
class Validator {
public:
    explicit Validator(std::uint64_t seed = 20240601) : seed_(seed) {}

    /// Budgets for the statistical experiments.
    std::size_t walls = 40;
    std::size_t ou_walls = 12;
    double ou_horizon = 500.0;

    std::vector<CriterionResult> run(ValidationLevel level, const std::function<void(const CriterionResult&)>& on_result = {}) {
        std::vector<std::pair<int, std::function<CriterionResult()>>> plan;
        if (level == ValidationLevel::full) {
            plan = {{1, [&] { return ballot(); }},          {2, [&] { return iid_irrelevance(); }},
                    {3, [&] { return relevance(); }},       {4, [&] { return symmetry(); }},
                    {5, [&] { return convexity(); }},       {6, [&] { return spectral_identity(); }},
                    {7, [&] { return quenched_vs_annealed(); }}, {8, [&] { return bm_ou_bridge(); }},
                    {9, [&] { return ratio_invariance(); }}, {10, [&] { return oracle_equivalence(); }},
                    {11, [&] { return subadditivity(); }},  {12, [&] { return fkg(); }},
                    {13, [&] { return tilted_mean(); }},    {14, [&] { return tail_bracket(); }},
                    {15, [&] { return infeasibility(); }}};
        } else {
            plan = {{10, [&] { return oracle_equivalence(); }}, {11, [&] { return subadditivity(); }},
                    {12, [&] { return fkg(); }},                {13, [&] { return tilted_mean(); }},
                    {14, [&] { return tail_bracket(); }},       {15, [&] { return infeasibility(); }},
                    {0, [&] { return bias_detector(); }}};
        }
        std::vector<CriterionResult> out;
        for (auto& [id, fn] : plan) {
            const auto t0 = std::chrono::steady_clock::now();
            CriterionResult r;
            try {
                r = fn();
            } catch (const std::exception& e) {
                r.pass = false;
                r.detail = std::string("error: ") + e.what();
            }
            r.id = id;
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (on_result) on_result(r);
            out.push_back(r);
        }
        return out;
    }

    // -- 1 ------------------------------------------------------------------
    CriterionResult ballot() {
        const auto wall = realize_wall(unit_wall(WallSpec::zero()), 4096, {seed_, 0});
        GridConfig cfg;
        cfg.dx = 0.1;
        const auto curve = grid_survival(wall, 1.0, dyadic_horizons(6, 12), EndWindow::none(), cfg);
        const auto fit = fit_exponent(curve, FitScale::log_time, FitWindow::between(64, 4096));
        return {1, "ballot baseline: zero wall, BM, horizons 2^6..2^12", std::abs(fit.gamma_hat - 0.5) <= 0.02,
                "gamma_hat = " + detail::fmt(fit.gamma_hat, 5) + " (target 0.50 +- 0.02)"};
    }

    // -- 2 ------------------------------------------------------------------
    CriterionResult iid_irrelevance() {
        auto c = bm_config(WallSpec::iid(StepLaw::gaussian(0, 1)));
        const auto& a = experiment("iid", c);
        return {2, "iid Gaussian wall is irrelevant (40 walls)", a.ci_lo <= 0.5 && 0.5 <= a.ci_hi,
                "aggregate " + detail::fmt_ci(a) + ", systematic " + detail::fmt(a.systematic, 5) +
                    " (CI must contain 0.5)"};
    }

    // -- 3 ------------------------------------------------------------------
    CriterionResult relevance() {
        const auto& a = bm(1.0);
        return {3, "relevance of disorder: beta = 1 Brownian wall (40 walls)", a.ci_lo > 0.5,
                "aggregate " + detail::fmt_ci(a) + " (lower bound must exceed 0.5)"};
    }

    // -- 4 ------------------------------------------------------------------
    CriterionResult symmetry() {
        const auto& p = bm(1.0);
        const auto& m = bm(-1.0);
        return {4, "symmetry: gamma(1) vs gamma(-1)", p.overlaps(m),
                "gamma(1) = " + detail::fmt_ci(p) + ", gamma(-1) = " + detail::fmt_ci(m) + " (CIs must overlap)"};
    }

    // -- 5 ------------------------------------------------------------------
    CriterionResult convexity() {
        const auto& g0 = bm(0.0);
        const auto& g1 = bm(1.0);
        const auto& g2 = bm(2.0);
        const bool ok = midpoint_convex(g0, g1, g2);
        return {5, "convexity midpoint test on beta in {0,1,2}", ok,
                "gamma(0) = " + detail::fmt(g0.mean) + ", gamma(1) = " + detail::fmt(g1.mean) + ", gamma(2) = " +
                    detail::fmt(g2.mean) + "; midpoint " + detail::fmt(g1.mean) + " vs chord " +
                    detail::fmt(0.5 * (g0.mean + g2.mean))};
    }

    // -- 6 ------------------------------------------------------------------
    CriterionResult spectral_identity() {
        std::string d;
        bool ok = true;
        for (auto [mu, beta] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {0.5, 1.0}}) {
            SpectralProblem p;
            p.mu1 = p.mu2 = mu;
            p.beta = beta;
            const auto r = principal_eigenvalue(p);
            const bool good = std::abs(r.lambda1 - mu) <= 0.02 * mu;
            ok = ok && good;
            if (!d.empty()) d += "; ";
            d += "(mu=" + detail::fmt(mu, 1) + ", beta=" + detail::fmt(beta, 1) + ") lambda1 = " + detail::fmt(r.lambda1, 5);
        }
        return {6, "spectral identity delta_{mu,mu}(beta) = mu", ok, d + " (within 2%)"};
    }

    // -- 7 ------------------------------------------------------------------
    CriterionResult quenched_vs_annealed() {
        const auto& q = kingman();
        SpectralProblem p;
        const double delta = principal_eigenvalue(p).lambda1;
        const ModelTag tag{"ou", 1.0, 1.0, 1.0};
        const auto v = disorder_relevance_report(q, tag, delta, tag);
        return {7, "quenched > annealed for OU (mu1 = mu2 = 1, beta = 1)", v.relevant,
                "Kingman gamma_{1,1}(1) = " + detail::fmt_ci(q) + " vs spectral delta = " + detail::fmt(delta, 5)};
    }

    // -- 8 ------------------------------------------------------------------
    CriterionResult bm_ou_bridge() {
        const auto& q = kingman();
        const auto& g = bm(1.0);
        const double lo = q.ci_lo / 2, hi = q.ci_hi / 2;
        const bool ok = lo <= g.ci_hi && g.ci_lo <= hi;
        return {8, "time change: gamma_{1,1}(1)/2 vs gamma(1)", ok,
                "gamma_{1,1}(1)/2 = " + detail::fmt(q.mean / 2) + " [" + detail::fmt(lo) + ", " + detail::fmt(hi) +
                    "], gamma(1) = " + detail::fmt_ci(g)};
    }

    // -- 9 ------------------------------------------------------------------
    CriterionResult ratio_invariance() {
        EnvModel env;
        env.family = EnvFamily::gaussian_random_mean;
        env.step_sd = 1.0;
        env.mean_sd = 1.0;
        auto c = bm_config(WallSpec::environment(env));
        c.process = ProcessSpec::environment_walk();
        const auto& walk = experiment("env", c);
        const auto rep = ratio_invariance_check(walk, bm(1.0));
        return {9, "ratio invariance: environment walk (Var W/Var B = 1) vs BM beta = 1", rep.pass,
                "environment " + detail::fmt_ci(walk) + ", BM " + detail::fmt_ci(bm(1.0))};
    }

    // -- 10 -----------------------------------------------------------------
    CriterionResult oracle_equivalence() {
        Rng rng(RngStream{seed_, 10});
        double worst = 0.0;
        int smc_bad = 0;
        const int instances = 25;
        for (int i = 0; i < instances; ++i) {
            const auto inst = random_discrete_instance(rng, i);
            const double exact = brute_force_survival(inst.law, inst.wall.values.values, inst.x0, inst.n, inst.window);
            GridConfig cfg;
            cfg.process = ProcessSpec::random_walk(inst.law);
            cfg.dx = 0.0;
            const auto g = grid_survival(inst.wall, inst.x0, {static_cast<double>(inst.n)}, inst.window, cfg);
            const double pg = std::exp(g.entries[0].logp);
            worst = std::max(worst, std::abs(pg - exact));

            SmcConfig s;
            s.process = cfg.process;
            s.particles = 2000;
            const auto sc = smc_survival_replicated(inst.wall, inst.x0, {static_cast<double>(inst.n)}, inst.window, s,
                                                    RngStream{seed_, 1000 + static_cast<std::uint64_t>(i)}, 50);
            const auto& e = sc.entries[0];
            if (exact == 0.0) {
                smc_bad += e.logp != neg_inf;
            } else if (e.logp == neg_inf) {
                ++smc_bad;
            } else {
                const double ph = std::exp(e.logp);
                const double se = ph * e.stderr_;
                smc_bad += se > 0 ? std::abs(ph - exact) > 3 * se : std::abs(ph - exact) > 1e-12;
            }
        }
        return {10, "oracle equivalence on 25 discrete instances (N <= 16)", worst <= 1e-12 && smc_bad == 0,
                "max |grid - exact| = " + sci(worst) + " (<= 1e-12); SMC outside 3 sigma: " + std::to_string(smc_bad)};
    }

    // -- 11 -----------------------------------------------------------------
    CriterionResult subadditivity() {
        const std::size_t nmax = 8;
        double worst = neg_inf;
        std::size_t checks = 0;
        GridConfig cfg;
        cfg.process = ProcessSpec::ornstein_uhlenbeck(1.0);
        cfg.dx = 0.05;
        for (std::uint64_t w = 0; w < 20; ++w) {
            double T = 60;
            WallRealization wall;
            ExcursionDecomposition d;
            do {
                wall = realize_wall(WallSpec::ou_wall(1, 1, 1, 1.0 / 16), T, {seed_, 1100 + w});
                d = decompose(wall.underlying);
                T *= 2;
            } while (d.count() < nmax);
            std::vector<std::vector<double>> q(nmax + 1, std::vector<double>(nmax + 1, 0.0));
            for (std::size_t m = 0; m < nmax; ++m)
                for (const auto& b : block_logprob_row(wall, d, m, nmax, BlockInterval{}, cfg)) q[m][b.n] = b.q;
            for (std::size_t l = 0; l < nmax; ++l)
                for (std::size_t m = l + 1; m < nmax; ++m)
                    for (std::size_t n = m + 1; n <= nmax; ++n) {
                        worst = std::max(worst, q[l][n] - q[l][m] - q[m][n]);
                        ++checks;
                    }
        }
        return {11, "subadditivity q_{l,n} <= q_{l,m} + q_{m,n} on 20 OU walls (n <= 8)", worst <= 1e-6,
                std::to_string(checks) + " triples, max violation " + sci(worst) + " (slack 1e-6)"};
    }

    // -- 12 -----------------------------------------------------------------
    CriterionResult fkg() {
        Rng rng(RngStream{seed_, 12});
        int bad = 0;
        double min_gap = pos_inf;
        for (int i = 0; i < 100; ++i) {
            const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10);
            const StepLaw law = random_lattice_law(rng, 3);
            const auto A = random_increasing_event(rng, n);
            const auto B = random_increasing_event(rng, n);
            const auto r = fkg_brute_check(law, n, A, B);
            bad += !r.holds;
            min_gap = std::min(min_gap, r.p_ab - r.p_a * r.p_b);
        }
        return {12, "FKG on 100 random increasing event pairs (N <= 10)", bad == 0,
                "violations " + std::to_string(bad) + ", min P(AB) - P(A)P(B) = " + sci(min_gap)};
    }

    // -- 13 -----------------------------------------------------------------
    CriterionResult tilted_mean() {
        std::vector<double> thetas;
        for (int i = 1; i <= 20; ++i) thetas.push_back(0.025 * i);
        bool ok = true;
        std::string d;
        for (const auto& law : {StepLaw::gaussian(0, 1), StepLaw::rademacher(), StepLaw::two_point(-1, 3, 0.25)}) {
            const auto r = tilted_mean_bracket_check(law, thetas);
            const auto t0 = tilt(law, 0.0);
            ok = ok && r.pass && t0.log_psi == 0.0 && std::abs(t0.mean()) < 1e-15;
            double worst = 0;
            for (const auto& row : r.rows) worst = std::max(worst, row.deviation / (row.theta * row.theta));
            if (!d.empty()) d += "; ";
            d += r.family + ": max dev/theta^2 = " + detail::fmt(worst) + " <= K = " + detail::fmt(r.K);
        }
        return {13, "tilted mean |m(theta) - theta E X^2| <= K theta^2 (three families)", ok, d};
    }

    // -- 14 -----------------------------------------------------------------
    CriterionResult tail_bracket() {
        int bad = 0;
        for (int i = 1; i <= 100; ++i) {
            const double x = i / 10.0;
            const auto [lo, hi] = gaussian_tail_bounds(x);
            const double t = normal_upper_tail(x);
            bad += !(lo <= t && t <= hi);
        }
        const auto [lo10, hi10] = gaussian_tail_bounds(10.0);
        // the ratio is (1 + x^2)/x^2, exactly 1.01 at x = 10
        const bool ok = bad == 0 && hi10 / lo10 <= 1.01 + 1e-12;
        return {14, "Gaussian tail bracket at x = 0.1, 0.2, ..., 10", ok,
                "violations " + std::to_string(bad) + ", upper/lower at x = 10: " + detail::fmt(hi10 / lo10, 6)};
    }

    // -- 15 -----------------------------------------------------------------
    CriterionResult infeasibility() {
        const auto law = StepLaw::rademacher();
        const auto spec = WallSpec::random_walk(StepLaw::two_point(-2, 2, 0.5), 1.0);
        const auto support = check_feasibility(law, spec, 1.0);
        for (std::uint64_t w = 0; w < 1000; ++w) {
            const auto wall = realize_wall(spec, 64, {seed_, 1500 + w});
            const auto f = check_feasibility(law, wall, 1.0);
            if (f.status != FeasibilityStatus::infeasible || !f.witness || *f.witness > 16) continue;
            GridConfig cfg;
            cfg.process = ProcessSpec::random_walk(law);
            cfg.dx = 0.0;
            const auto curve = grid_survival(wall, 1.0, dyadic_horizons(0, 6), EndWindow::none(), cfg);
            bool branch = true;
            for (const auto& e : curve.entries)
                branch = branch && ((e.horizon >= static_cast<double>(*f.witness)) == (e.logp == neg_inf));
            const auto fit = fit_exponent(curve, FitScale::log_time);
            const bool ok = support.status == FeasibilityStatus::infeasible && branch && fit.infeasible &&
                            fit.gamma_hat == pos_inf;
            return {15, "infeasibility branch: +-1 walk below a +-2 wall", ok,
                    "support test " + std::string(to_string(support.status)) + ", wall " + std::to_string(w) +
                        " blocks at n = " + std::to_string(*f.witness) + ", log p = -inf from there on, exponent " +
                        (fit.infeasible ? "+inf" : detail::fmt(fit.gamma_hat))};
        }
        return {15, "infeasibility branch: +-1 walk below a +-2 wall", false, "no blocking wall found"};
    }

    // -- bias detector --------------------------------------------------------
    /// Zero-wall slope at dt against dt/4: a bridge-corrected engine is dt-stable, a plain grid
    /// is biased low at coarse dt.
    static double dt_drift(bool bridge, std::uint64_t seed) {
        auto slope = [&](double dt) {
            WallSpec s = WallSpec::zero();
            s.dt = dt;
            const auto wall = realize_wall(s, 512, {seed, 0});
            GridConfig cfg;
            cfg.dx = 0.1;
            cfg.bridge = bridge;
            return fit_exponent(grid_survival(wall, 1.0, dyadic_horizons(3, 9), EndWindow::none(), cfg),
                                FitScale::log_time)
                .gamma_hat;
        };
        return slope(1.0) - slope(0.25);
    }

    CriterionResult bias_detector() {
        const double on = dt_drift(true, seed_);
        const double off = dt_drift(false, seed_);
        const double tol = 1e-3;
        return {0, "bias detector: bridge on is dt-stable, bridge off is flagged",
                std::abs(on) < tol && std::abs(off) >= tol,
                "slope(dt=1) - slope(dt=1/4): bridge on " + sci(on) + ", bridge off " + sci(off) + " (flag at " +
                    sci(tol) + ")"};
    }

private:
    struct DiscreteInstance {
        StepLaw law = StepLaw::rademacher();
        WallRealization wall;
        double x0 = 0;
        std::size_t n = 0;
        EndWindow window;
    };

    static std::string sci(double v) {
        std::ostringstream os;
        os << std::setprecision(2) << std::scientific << v;
        return os.str();
    }

    static WallSpec unit_wall(WallSpec s) {
        s.dt = 1.0;
        return s;
    }

    /// Integer-valued law with 2..max_atoms atoms in {-2..2}, not a point mass.
    static StepLaw random_lattice_law(Rng& rng, int max_atoms) {
        std::vector<double> pool{-2, -1, 0, 1, 2};
        std::shuffle(pool.begin(), pool.end(), rng);
        const int k = 2 + static_cast<int>(rng.uniform() * (max_atoms - 1));
        DiscreteLaw d;
        double s = 0;
        for (int i = 0; i < k; ++i) {
            d.values.push_back(pool[static_cast<std::size_t>(i)]);
            d.probs.push_back(0.1 + rng.uniform());
            s += d.probs.back();
        }
        for (auto& p : d.probs) p /= s;
        double t = 0;
        for (std::size_t i = 0; i + 1 < d.probs.size(); ++i) t += d.probs[i];
        d.probs.back() = 1.0 - t;
        return StepLaw(d);
    }

    DiscreteInstance random_discrete_instance(Rng& rng, int i) const {
        DiscreteInstance inst;
        inst.law = random_lattice_law(rng, 3);
        const std::size_t atoms = inst.law.as_discrete().values.size();
        const std::size_t cap = atoms == 2 ? 16 : 12;
        inst.n = 4 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(cap - 3));
        inst.x0 = std::floor(rng.uniform() * 4);
        const auto wall_law = StepLaw(DiscreteLaw{{-1, 0, 1}, {0.25, 0.5, 0.25}});
        inst.wall = realize_wall(WallSpec::random_walk(wall_law, 1.0), static_cast<double>(inst.n),
                                 {seed_, 2000 + static_cast<std::uint64_t>(i)});
        switch (i % 3) {
            case 0: inst.window = EndWindow::none(); break;
            case 1: inst.window = EndWindow::sqrt_scaled(0.0, pos_inf); break;
            default: inst.window = EndWindow::sqrt_scaled(-0.5, 1.0); break;
        }
        return inst;
    }

    static MonotoneEvent random_increasing_event(Rng& rng, std::size_t n) {
        MonotoneEvent e;
        const int clauses = 1 + static_cast<int>(rng.uniform() * 3);
        for (int c = 0; c < clauses; ++c) {
            std::vector<ThresholdAtom> clause;
            const int atoms = 1 + static_cast<int>(rng.uniform() * 3);
            for (int a = 0; a < atoms; ++a) {
                ThresholdAtom t;
                t.index = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
                const double range = std::sqrt(static_cast<double>(t.index)) * 2.0;
                t.threshold = std::round((rng.uniform() * 2 - 1) * range);
                clause.push_back(t);
            }
            e.clauses.push_back(clause);
        }
        return e;
    }

    ExperimentConfig bm_config(WallSpec wall) const {
        ExperimentConfig c;
        c.process = ProcessSpec::brownian();
        c.wall = unit_wall(std::move(wall));
        c.horizons = dyadic_horizons(4, 12);
        c.dx = 0.2;
        c.n_walls = walls;
        c.seed = seed_;
        return c;
    }

    const QuenchedAggregate& experiment(const std::string& key, const ExperimentConfig& c) {
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            const auto rec = run_experiment(c);
            require(rec.aggregate.has_value(), ErrorKind::experiment_failed, "every wall died in '" + key + "'");
            it = cache_.emplace(key, *rec.aggregate).first;
        }
        return it->second;
    }

    const QuenchedAggregate& bm(double beta) {
        if (beta == 0.0) {
            auto c = bm_config(WallSpec::zero());
            c.n_walls = 1;
            return experiment("bm0", c);
        }
        return experiment("bm" + fmt_real(beta), bm_config(WallSpec::brownian(beta, 1.0)));
    }

    const QuenchedAggregate& kingman() {
        ExperimentConfig c;
        c.process = ProcessSpec::ornstein_uhlenbeck(1.0);
        c.wall = WallSpec::ou_wall(1, 1, 1, 1.0 / 16);
        c.estimator = Estimator::kingman;
        c.horizons = {ou_horizon};
        c.dx = 0.025;
        c.n_walls = ou_walls;
        c.seed = seed_;
        return experiment("kingman", c);
    }

    std::uint64_t seed_;
    std::map<std::string, QuenchedAggregate> cache_;
};

inline std::string format_result(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << "  ";
    if (r.id > 0)
        os << "[" << std::setw(2) << std::setfill('0') << r.id << "] ";
    else
        os << "[--] ";
    os << r.name << " -- " << r.detail << " (" << std::fixed << std::setprecision(1) << r.seconds << " s)";
    return os.str();
}

}  // namespace persist
