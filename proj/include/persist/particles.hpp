#pragma once

// Stochastic estimators of quenched survival: the sequential particle
// estimator (a particle approximation of the transfer operator with
// systematic resampling) and the direct Monte Carlo baseline. Both draw the
// walker's steps exactly and share one path stepper.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/paths.hpp"
#include "persist/rng.hpp"
#include "persist/survival.hpp"
#include "persist/walls.hpp"

namespace persist {

namespace detail {

/// Exact one-step sampler for the walker along a wall, with barrier and bridge bookkeeping
/// matching GridRun.
class PathStepper {
public:
    PathStepper(const WallRealization& wall, const ProcessSpec& process, bool bridge, bool wall_subgrid)
        : wall_(&wall), process_(process) {
        if (process.integer_time())
            require(wall.spec.dt == 1.0, ErrorKind::invalid_input, "random walks need a unit-step wall");
        if (process.kind == ProcessKind::rw_env)
            require(wall.env.has_value(), ErrorKind::invalid_input, "rw-env needs an environment wall");
        dt_ = wall.spec.dt;
        const bool continuous = bridge && !wall.spec.integer_time() && !process.integer_time();
        if (continuous) {
            double rate = process.kind == ProcessKind::ou ? process.ou.sigma * process.ou.sigma : 1.0;
            if (wall_subgrid) {
                const double b2 = wall.spec.beta * wall.spec.beta;
                if (wall.spec.kind == WallKind::scaled_brownian) rate += b2;
                if (wall.spec.kind == WallKind::scaled_ou) rate += b2 * wall.spec.ou.sigma * wall.spec.ou.sigma;
            }
            bridge_var_ = rate * dt_;
        }
        if (process.kind == ProcessKind::ou) {
            decay_ = std::exp(-process.ou.mu * dt_);
            sd_ = std::sqrt(process.ou.transition(0.0, dt_).second);
        } else {
            sd_ = std::sqrt(dt_);
        }
    }

    double barrier(std::size_t k) const {
        const double t = static_cast<double>(k) * dt_;
        const double f = wall_->spec.perturbation ? (*wall_->spec.perturbation)(t) : 0.0;
        if (process_.kind == ProcessKind::rw_env) return f;
        return wall_->values.values[k] + f;
    }

    double wall_value(std::size_t k) const {
        return process_.kind == ProcessKind::rw_env ? 0.0 : wall_->values.values[k];
    }

    double step(double x, std::size_t k, Rng& rng) const {
        switch (process_.kind) {
            case ProcessKind::bm: return x + sd_ * rng.normal();
            case ProcessKind::ou: return decay_ * x + sd_ * rng.normal();
            case ProcessKind::rw: return x + process_.step.sample(rng);
            case ProcessKind::rw_env: return x + wall_->env->laws[k].sample(rng);
        }
        return x;
    }

    /// Probability of no crossing between grid points k and k+1 given the endpoints (0 if the
    /// endpoint is below the barrier).
    double survive_factor(double x0, double x1, std::size_t k) const {
        const double b1 = barrier(k + 1);
        if (x1 < b1) return 0.0;
        if (bridge_var_ <= 0.0) return 1.0;
        return bridge_noncrossing(x0 - barrier(k), x1 - b1, 1.0, bridge_var_);
    }

    double dt() const { return dt_; }

private:
    const WallRealization* wall_;
    ProcessSpec process_;
    double dt_ = 1.0;
    double decay_ = 1.0;
    double sd_ = 1.0;
    double bridge_var_ = 0.0;
};

inline std::vector<std::size_t> horizon_steps(const WallRealization& wall, const std::vector<double>& horizons) {
    require(!horizons.empty(), ErrorKind::invalid_input, "no horizons");
    require(horizons.back() <= wall.horizon + 1e-9, ErrorKind::out_of_range, "wall horizon shorter than horizons");
    std::vector<std::size_t> steps;
    for (double h : horizons) steps.push_back(wall.step_index(h));
    for (std::size_t i = 1; i < steps.size(); ++i)
        require(steps[i] > steps[i - 1], ErrorKind::invalid_input, "horizons must increase");
    return steps;
}

}  // namespace detail

struct ParticleEnsemble {
    std::vector<double> positions;
    std::vector<double> weights;  // normalized to sum 1
    double log_mass = 0.0;
    double ess = 0.0;

    std::size_t size() const { return positions.size(); }

    void update_ess() {
        double s2 = 0.0;
        for (double w : weights) s2 += w * w;
        ess = s2 > 0.0 ? 1.0 / s2 : 0.0;
    }
};

/// Systematic resampling: one uniform offset, M evenly spaced pointers. Returns ancestor indices.
inline std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t m, Rng& rng) {
    std::vector<std::size_t> idx(m);
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double step = total / static_cast<double>(m);
    double u = rng.uniform() * step;
    double c = weights[0];
    std::size_t i = 0;
    for (std::size_t k = 0; k < m; ++k) {
        while (u > c && i + 1 < weights.size()) c += weights[++i];
        idx[k] = i;
        u += step;
    }
    return idx;
}

struct SmcConfig {
    ProcessSpec process;
    std::size_t particles = 10000;
    double resample_threshold = 0.5;  // resample when ess < threshold * M
    bool bridge = true;
    bool wall_subgrid = true;
};

/// Particle estimate of log p_N. Each step multiplies weights by the survival factor, folds the
/// surviving fraction into log_mass, and resamples systematically when the ess drops.
inline SurvivalCurve smc_survival(const WallRealization& wall, double x0, const std::vector<double>& horizons,
                                  const EndWindow& window, const SmcConfig& cfg, RngStream stream) {
    require(cfg.particles >= 1, ErrorKind::invalid_input, "need at least one particle");
    const auto steps = detail::horizon_steps(wall, horizons);
    detail::PathStepper stepper(wall, cfg.process, cfg.bridge, cfg.wall_subgrid);
    Rng rng(stream);
    const std::size_t M = cfg.particles;
    ParticleEnsemble ens;
    ens.positions.assign(M, x0);
    ens.weights.assign(M, 1.0 / static_cast<double>(M));
    ens.ess = static_cast<double>(M);
    bool died = x0 < stepper.barrier(0);
    double min_ess = static_cast<double>(M);

    SurvivalCurve curve;
    curve.wall_id = wall.seed.stream;
    curve.seed = stream.seed;
    std::size_t k = 0;
    for (std::size_t h = 0; h < steps.size(); ++h) {
        for (; k < steps[h] && !died; ++k) {
            double total = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                if (ens.weights[i] == 0.0) continue;
                const double x1 = stepper.step(ens.positions[i], k, rng);
                ens.weights[i] *= stepper.survive_factor(ens.positions[i], x1, k);
                ens.positions[i] = x1;
                total += ens.weights[i];
            }
            if (!(total > 0.0)) {
                died = true;
                break;
            }
            ens.log_mass += std::min(0.0, std::log(total));
            for (auto& w : ens.weights) w /= total;
            ens.update_ess();
            min_ess = std::min(min_ess, ens.ess);
            if (M > 1 && ens.ess < cfg.resample_threshold * static_cast<double>(M)) {
                const auto idx = systematic_resample(ens.weights, M, rng);
                std::vector<double> pos(M);
                for (std::size_t i = 0; i < M; ++i) pos[i] = ens.positions[idx[i]];
                ens.positions = std::move(pos);
                ens.weights.assign(M, 1.0 / static_cast<double>(M));
                ens.ess = static_cast<double>(M);
            }
        }
        SurvivalPoint p;
        p.horizon = horizons[h];
        p.estimator = "smc";
        if (died) {
            p.logp = neg_inf;
            p.died = true;
            p.note = "all particles died";
        } else {
            double in = 0.0;
            for (std::size_t i = 0; i < M; ++i)
                if (ens.weights[i] > 0.0 &&
                    window.contains(ens.positions[i], stepper.wall_value(k), x0, horizons[h]))
                    in += ens.weights[i];
            p.logp = in > 0.0 ? ens.log_mass + std::log(in) : neg_inf;
            if (in == 0.0) p.note = "window-empty";
        }
        if (M < 2 || min_ess < 10.0) p.note += p.note.empty() ? "low-ess" : ";low-ess";
        curve.add(p);
    }
    return curve;
}

/// Mean of R independent particle estimates of p_N; logp = log(mean), stderr by the delta method.
inline SurvivalCurve smc_survival_replicated(const WallRealization& wall, double x0,
                                             const std::vector<double>& horizons, const EndWindow& window,
                                             const SmcConfig& cfg, RngStream stream, std::size_t replicates) {
    require(replicates >= 2, ErrorKind::invalid_input, "need at least two replicates");
    std::vector<std::vector<double>> logs(horizons.size());
    for (std::size_t r = 0; r < replicates; ++r) {
        const auto c = smc_survival(wall, x0, horizons, window, cfg, stream.child(r));
        for (std::size_t h = 0; h < horizons.size(); ++h) logs[h].push_back(c.entries[h].logp);
    }
    SurvivalCurve out;
    out.wall_id = wall.seed.stream;
    out.seed = stream.seed;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        double mx = neg_inf;
        for (double l : logs[h]) mx = std::max(mx, l);
        SurvivalPoint p;
        p.horizon = horizons[h];
        p.estimator = "smc-mean";
        if (mx == neg_inf) {
            p.logp = neg_inf;
            p.died = true;
            out.add(p);
            continue;
        }
        double s = 0.0, s2 = 0.0;
        for (double l : logs[h]) {
            const double v = l == neg_inf ? 0.0 : std::exp(l - mx);
            s += v;
            s2 += v * v;
        }
        const double R = static_cast<double>(replicates);
        const double mean = s / R;
        const double var = std::max(0.0, (s2 / R - mean * mean) * R / (R - 1.0));
        p.logp = mx + std::log(mean);
        p.stderr_ = std::sqrt(var / R) / mean;
        out.add(p);
    }
    return out;
}

struct DirectMcConfig {
    ProcessSpec process;
    std::size_t samples = 100000;
    bool bridge = true;
    bool wall_subgrid = true;
};

/// Fraction of independent paths that survive; binomial stderr on the log scale.
inline SurvivalCurve direct_mc_survival(const WallRealization& wall, double x0, const std::vector<double>& horizons,
                                        const EndWindow& window, const DirectMcConfig& cfg, RngStream stream) {
    require(cfg.samples >= 1, ErrorKind::invalid_input, "need at least one sample");
    const auto steps = detail::horizon_steps(wall, horizons);
    detail::PathStepper stepper(wall, cfg.process, cfg.bridge, cfg.wall_subgrid);
    Rng rng(stream);
    std::vector<std::size_t> count(horizons.size(), 0);
    const bool start_ok = x0 >= stepper.barrier(0);
    for (std::size_t s = 0; s < cfg.samples && start_ok; ++s) {
        double x = x0;
        std::size_t k = 0;
        bool alive = true;
        for (std::size_t h = 0; h < steps.size() && alive; ++h) {
            for (; k < steps[h]; ++k) {
                const double x1 = stepper.step(x, k, rng);
                const double f = stepper.survive_factor(x, x1, k);
                x = x1;
                if (f < 1.0 && !(f > 0.0 && rng.uniform() < f)) {
                    alive = false;
                    break;
                }
            }
            if (alive && window.contains(x, stepper.wall_value(k), x0, horizons[h])) ++count[h];
        }
    }
    SurvivalCurve curve;
    curve.wall_id = wall.seed.stream;
    curve.seed = stream.seed;
    const double n = static_cast<double>(cfg.samples);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        SurvivalPoint p;
        p.horizon = horizons[h];
        p.estimator = "direct-mc";
        if (count[h] == 0) {
            p.logp = neg_inf;
            p.note = "zero-count";
        } else {
            const double ph = static_cast<double>(count[h]) / n;
            p.logp = std::log(ph);
            p.stderr_ = std::sqrt((1.0 - ph) / (n * ph));
            if (ph < 100.0 / n) p.note = "unreliable: fewer than 100 survivors";
        }
        curve.add(p);
    }
    return curve;
}

}  // namespace persist
