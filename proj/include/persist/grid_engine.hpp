#pragma once

// Deterministic transfer-operator engine. The state is a finite measure on a
// uniform lattice, stored as a normalized mass vector plus its log total mass;
// one propagation step applies the transition kernel, discounts inter-step
// barrier crossings with the Brownian-bridge factor, and kills mass below the
// barrier. The total mass after n steps is the quenched survival probability.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/paths.hpp"
#include "persist/step_law.hpp"
#include "persist/survival.hpp"
#include "persist/walls.hpp"

namespace persist {

struct GridDensity {
    double origin = 0.0;  // position of lattice index 0
    double dx = 0.02;
    long first = 0;       // lattice index of masses[0]
    std::vector<double> masses;
    double log_mass_total = 0.0;
    double trimmed_mass = 0.0;  // relative mass discarded by tail trimming, summed over steps
    bool died = false;

    static GridDensity point(double x0, double dx) {
        require(dx > 0.0 && std::isfinite(dx), ErrorKind::invalid_input, "dx must be > 0");
        GridDensity g;
        g.origin = x0;
        g.dx = dx;
        g.masses = {1.0};
        return g;
    }

    double x(long k) const { return origin + static_cast<double>(k) * dx; }
    long last() const { return first + static_cast<long>(masses.size()); }  // one past the end
    double xmin() const { return x(first); }
    double xmax() const { return x(last() - 1); }
    double total() const { return died ? 0.0 : std::exp(log_mass_total); }

    /// log of the total mass on nodes satisfying `keep`.
    template <class Pred>
    double log_mass_where(Pred keep) const {
        if (died) return neg_inf;
        double s = 0.0;
        for (std::size_t i = 0; i < masses.size(); ++i)
            if (masses[i] > 0.0 && keep(x(first + static_cast<long>(i)))) s += masses[i];
        return s > 0.0 ? log_mass_total + std::log(s) : neg_inf;
    }
};

/// One-step transition on the lattice origin + k*dx. Rows give, for a source
/// index, the first target index and normalized weights.
class TransitionKernel {
public:
    struct Row {
        long first = 0;
        std::span<const double> weights;
    };

    /// Exact kernel of a finite-support law whose atoms are multiples of dx.
    static TransitionKernel lattice(const StepLaw& law, double dx) {
        require(law.is_discrete(), ErrorKind::invalid_input, "lattice kernel needs a finite-support law");
        const auto& d = law.as_discrete();
        long lo = 0, hi = 0;
        std::vector<long> ks(d.values.size());
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            const double k = d.values[i] / dx;
            ks[i] = std::lround(k);
            require(std::abs(k - static_cast<double>(ks[i])) < 1e-9 * std::max(1.0, std::abs(k)),
                    ErrorKind::invalid_input, "step atoms must be multiples of dx");
            lo = i == 0 ? ks[i] : std::min(lo, ks[i]);
            hi = i == 0 ? ks[i] : std::max(hi, ks[i]);
        }
        TransitionKernel kern;
        kern.offset_ = lo;
        kern.taps_.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
        for (std::size_t i = 0; i < ks.size(); ++i) kern.taps_[static_cast<std::size_t>(ks[i] - lo)] += d.probs[i];
        return kern;
    }

    /// Discretized N(mean, var) increment, truncated at `tail_sd` standard deviations.
    static TransitionKernel gaussian(double mean, double var, double dx, double tail_sd = 9.0) {
        require(var > 0.0 && std::isfinite(var) && std::isfinite(mean), ErrorKind::invalid_input,
                "gaussian kernel needs var > 0");
        const double sd = std::sqrt(var);
        require(sd >= dx, ErrorKind::invalid_input, "dx too coarse for the step standard deviation");
        TransitionKernel kern;
        const long lo = static_cast<long>(std::floor((mean - tail_sd * sd) / dx));
        const long hi = static_cast<long>(std::ceil((mean + tail_sd * sd) / dx));
        kern.offset_ = lo;
        kern.taps_.resize(static_cast<std::size_t>(hi - lo + 1));
        for (long k = lo; k <= hi; ++k) {
            const double z = (static_cast<double>(k) * dx - mean) / sd;
            kern.taps_[static_cast<std::size_t>(k - lo)] = std::exp(-0.5 * z * z);
        }
        const double s = std::accumulate(kern.taps_.begin(), kern.taps_.end(), 0.0);
        for (auto& w : kern.taps_) w /= s;
        return kern;
    }

    /// Exact OU transition over dt, discretized on the lattice indices [kmin, kmax].
    static TransitionKernel ornstein_uhlenbeck(const OuParams& p, double dt, double origin, double dx, long kmin,
                                               long kmax, double tail_sd = 9.0) {
        p.validate();
        require(kmin < kmax, ErrorKind::invalid_input, "empty OU domain");
        const double decay = std::exp(-p.mu * dt);
        const double sd = std::sqrt(p.sigma * p.sigma * (-std::expm1(-2.0 * p.mu * dt)) / (2.0 * p.mu));
        require(sd >= dx, ErrorKind::invalid_input, "dx too coarse for the OU step standard deviation");
        TransitionKernel kern;
        kern.row_min_ = kmin;
        kern.row_first_.resize(static_cast<std::size_t>(kmax - kmin + 1));
        kern.row_start_.resize(kern.row_first_.size() + 1);
        kern.row_start_[0] = 0;
        for (long k = kmin; k <= kmax; ++k) {
            const double centre = (origin + static_cast<double>(k) * dx) * decay;
            const long lo = std::max(kmin, static_cast<long>(std::floor((centre - tail_sd * sd - origin) / dx)));
            const long hi = std::min(kmax, static_cast<long>(std::ceil((centre + tail_sd * sd - origin) / dx)));
            const std::size_t r = static_cast<std::size_t>(k - kmin);
            kern.row_first_[r] = lo;
            double s = 0.0;
            const std::size_t start = kern.taps_.size();
            for (long j = lo; j <= hi; ++j) {
                const double z = (origin + static_cast<double>(j) * dx - centre) / sd;
                const double w = std::exp(-0.5 * z * z);
                kern.taps_.push_back(w);
                s += w;
            }
            for (std::size_t i = start; i < kern.taps_.size(); ++i) kern.taps_[i] /= s;
            kern.row_start_[r + 1] = kern.taps_.size();
        }
        kern.row_max_ = kmax;
        kern.translation_invariant_ = false;
        return kern;
    }

    /// Enables continuous monitoring: crossings between grid times are discounted with the
    /// Brownian-bridge non-crossing probability for variance var_rate * dt.
    TransitionKernel& with_bridge(double bridge_variance) {
        bridge_variance_ = bridge_variance;
        return *this;
    }

    double bridge_variance() const { return bridge_variance_; }
    bool translation_invariant() const { return translation_invariant_; }

    Row row(long k) const {
        if (translation_invariant_) return {k + offset_, taps_};
        if (k < row_min_ || k > row_max_) return {k, {}};
        const auto r = static_cast<std::size_t>(k - row_min_);
        return {row_first_[r], std::span<const double>(taps_).subspan(row_start_[r], row_start_[r + 1] - row_start_[r])};
    }

    std::pair<long, long> target_range(long src_first, long src_last) const {
        if (translation_invariant_)
            return {src_first + offset_, src_last - 1 + offset_ + static_cast<long>(taps_.size())};
        long lo = row_max_, hi = row_min_;
        for (long k = std::max(src_first, row_min_); k < std::min(src_last, row_max_ + 1); ++k) {
            const Row r = row(k);
            lo = std::min(lo, r.first);
            hi = std::max(hi, r.first + static_cast<long>(r.weights.size()));
        }
        return {lo, std::max(lo, hi)};
    }

private:
    std::vector<double> taps_;
    long offset_ = 0;
    bool translation_invariant_ = true;
    std::vector<long> row_first_;
    std::vector<std::size_t> row_start_;
    long row_min_ = 0, row_max_ = -1;
    double bridge_variance_ = 0.0;
};

inline constexpr double default_trim_eps = 1e-22;

/// One application of the transfer operator: convolve, discount bridge crossings, kill mass
/// below barrier_next, renormalize. A barrier of -inf means no constraint.
inline GridDensity grid_propagate(const GridDensity& state, const TransitionKernel& kernel, double barrier_now,
                                  double barrier_next, double trim_eps = default_trim_eps) {
    if (state.died) return state;
    const auto [lo, hi] = kernel.target_range(state.first, state.last());
    GridDensity out;
    out.origin = state.origin;
    out.dx = state.dx;
    out.trimmed_mass = state.trimmed_mass;
    out.log_mass_total = state.log_mass_total;

    long alive_from = lo;
    if (barrier_next != neg_inf)
        alive_from = std::max(lo, static_cast<long>(std::ceil((barrier_next - state.origin) / state.dx)) - 1);
    while (alive_from < hi && state.x(alive_from) < barrier_next) ++alive_from;

    std::vector<double> next(static_cast<std::size_t>(std::max(0L, hi - lo)), 0.0);
    const double bv = kernel.bridge_variance();
    const bool bridge = bv > 0.0 && barrier_now != neg_inf && barrier_next != neg_inf;

    for (std::size_t i = 0; i < state.masses.size(); ++i) {
        const double m = state.masses[i];
        if (m <= 0.0) continue;
        const long src = state.first + static_cast<long>(i);
        const auto row = kernel.row(src);
        if (row.weights.empty()) continue;
        const long t0 = std::max(0L, alive_from - row.first);
        const long tn = static_cast<long>(row.weights.size());
        if (t0 >= tn) continue;
        double* dst = next.data() + (row.first - lo);
        const double* w = row.weights.data();
        if (!bridge) {
            for (long t = t0; t < tn; ++t) dst[t] += m * w[t];
            continue;
        }
        const double a = state.x(src) - barrier_now;
        if (!(a > 0.0)) continue;
        // beyond b_cut the non-crossing factor exceeds 1 - e^{-40}
        const double b_cut = 20.0 * bv / a;
        long t_exact_end = tn;
        const double jcut = std::ceil((barrier_next + b_cut - state.origin) / state.dx);
        if (jcut < static_cast<double>(row.first + tn)) t_exact_end = std::max(t0, static_cast<long>(jcut) - row.first);
        for (long t = t0; t < t_exact_end; ++t) {
            const double b = state.x(row.first + t) - barrier_next;
            dst[t] += m * w[t] * bridge_noncrossing(a, b, 1.0, bv);
        }
        for (long t = t_exact_end; t < tn; ++t) dst[t] += m * w[t];
    }

    double total = 0.0;
    for (double v : next) total += v;
    if (!(total > 0.0)) {
        out.died = true;
        out.log_mass_total = neg_inf;
        out.first = lo;
        return out;
    }
    long b = 0, e = static_cast<long>(next.size());
    double trimmed = 0.0;
    while (b < e && next[static_cast<std::size_t>(b)] < trim_eps * total) trimmed += next[static_cast<std::size_t>(b++)];
    while (e > b && next[static_cast<std::size_t>(e - 1)] < trim_eps * total) trimmed += next[static_cast<std::size_t>(--e)];
    out.first = lo + b;
    out.masses.assign(next.begin() + b, next.begin() + e);
    for (auto& v : out.masses) v /= total;
    out.trimmed_mass += trimmed / total;
    out.log_mass_total += std::min(0.0, std::log(total));
    return out;
}

// ---------------------------------------------------------------------------
// Running the engine against a quenched wall.

struct GridConfig {
    ProcessSpec process;
    double dx = 0.02;          // 0 selects the lattice spacing of a discrete step law
    bool bridge = true;        // continuous monitoring for continuous-time walls
    bool wall_subgrid = true;  // bridge variance also integrates the wall between grid points
    double ou_box_sd = 10.0;   // OU lattice half-width in stationary standard deviations
    double trim_eps = default_trim_eps;
};

namespace detail {

inline double lattice_spacing(const StepLaw& law) {
    const auto& d = law.as_discrete();
    double g = 0.0;
    for (double v : d.values) {
        double a = std::abs(v);
        if (a == 0.0) continue;
        if (g == 0.0) {
            g = a;
            continue;
        }
        // approximate real gcd
        double x = std::max(a, g), y = std::min(a, g);
        while (y > 1e-9 * x) {
            const double r = std::fmod(x, y);
            x = y;
            y = r < 1e-9 * x || x - r < 1e-9 * x ? 0.0 : r;
        }
        g = x;
    }
    return g == 0.0 ? 1.0 : g;
}

}  // namespace detail

/// Stateful propagation of the transfer operator along a wall, from grid index `start`.
class GridRun {
public:
    GridRun(const WallRealization& wall, const GridConfig& cfg, double x0, std::size_t start = 0)
        : wall_(&wall), cfg_(cfg), x0_(x0), index_(start) {
        require(std::isfinite(x0), ErrorKind::invalid_input, "start position must be finite");
        if (cfg_.process.integer_time())
            require(wall.spec.dt == 1.0, ErrorKind::invalid_input, "random walks need a unit-step wall");
        if (cfg_.process.kind == ProcessKind::rw_env)
            require(wall.env.has_value(), ErrorKind::invalid_input, "rw-env needs an environment wall");
        dx_ = cfg_.dx;
        if (dx_ == 0.0) {
            require(cfg_.process.kind == ProcessKind::rw && cfg_.process.step.is_discrete(), ErrorKind::invalid_input,
                    "dx = 0 is only valid for a discrete random-walk step law");
            dx_ = detail::lattice_spacing(cfg_.process.step);
        }
        state_ = GridDensity::point(x0, dx_);
        if (x0 < barrier(start)) kill();
        build_fixed_kernel();
    }

    bool continuous() const {
        return cfg_.bridge && !wall_->spec.integer_time() && !cfg_.process.integer_time();
    }

    /// Barrier at grid index k: wall + f, or f alone for environment walks.
    double barrier(std::size_t k) const {
        const double t = static_cast<double>(k) * wall_->spec.dt;
        const double f = wall_->spec.perturbation ? (*wall_->spec.perturbation)(t) : 0.0;
        if (cfg_.process.kind == ProcessKind::rw_env) return f;
        return wall_value(k) + f;
    }

    /// Wall value entering the end window.
    double wall_value(std::size_t k) const {
        if (cfg_.process.kind == ProcessKind::rw_env) return 0.0;
        require(k < wall_->values.size(), ErrorKind::out_of_range, "grid index beyond wall horizon");
        return wall_->values.values[k];
    }

    void advance_to(std::size_t k) {
        require(k >= index_, ErrorKind::invalid_input, "cannot propagate backwards");
        require(k < wall_->values.size(), ErrorKind::out_of_range, "grid index beyond wall horizon");
        while (index_ < k && !state_.died) {
            const TransitionKernel& kern = kernel_for(index_);
            state_ = grid_propagate(state_, kern, barrier(index_), barrier(index_ + 1), cfg_.trim_eps);
            ++index_;
        }
        if (state_.died) index_ = k;
    }

    /// log P(survive to the current index, end window satisfied).
    double log_survival(const EndWindow& window) const {
        if (state_.died) return neg_inf;
        if (!window.enabled) return state_.log_mass_total;
        const double w = wall_value(index_);
        const double t = static_cast<double>(index_) * wall_->spec.dt;
        return state_.log_mass_where([&](double x) { return window.contains(x, w, x0_, t); });
    }

    const GridDensity& density() const { return state_; }
    std::size_t index() const { return index_; }
    double dx() const { return dx_; }

private:
    /// Diffusion rate of the raw wall, used when the wall's sub-grid fluctuation is integrated out.
    double wall_subgrid_rate() const {
        if (!cfg_.wall_subgrid) return 0.0;
        const auto& s = wall_->spec;
        const double b2 = s.beta * s.beta;
        if (s.kind == WallKind::scaled_brownian) return b2;
        if (s.kind == WallKind::scaled_ou) return b2 * s.ou.sigma * s.ou.sigma;
        return 0.0;
    }

    void kill() {
        state_.died = true;
        state_.log_mass_total = neg_inf;
    }

    void build_fixed_kernel() {
        const double dt = wall_->spec.dt;
        const double bv_rate = continuous() ? 1.0 + wall_subgrid_rate() : 0.0;
        switch (cfg_.process.kind) {
            case ProcessKind::bm:
                fixed_ = TransitionKernel::gaussian(0.0, dt, dx_);
                fixed_->with_bridge(bv_rate * dt);
                break;
            case ProcessKind::ou: {
                const auto& p = cfg_.process.ou;
                const double half = cfg_.ou_box_sd * std::sqrt(p.stationary_variance());
                double lo = std::min(x0_, -half), hi = std::max(x0_, half);
                for (double v : wall_->values.values) {
                    lo = std::min(lo, v - 1.0);
                    hi = std::max(hi, v + 2.0);
                }
                const long kmin = static_cast<long>(std::floor((lo - x0_) / dx_));
                const long kmax = static_cast<long>(std::ceil((hi - x0_) / dx_));
                fixed_ = TransitionKernel::ornstein_uhlenbeck(p, dt, x0_, dx_, kmin, kmax);
                fixed_->with_bridge(continuous() ? (p.sigma * p.sigma + wall_subgrid_rate()) * dt : 0.0);
                break;
            }
            case ProcessKind::rw:
                fixed_ = cfg_.process.step.is_discrete()
                             ? TransitionKernel::lattice(cfg_.process.step, dx_)
                             : TransitionKernel::gaussian(cfg_.process.step.mean(), cfg_.process.step.variance(), dx_);
                break;
            case ProcessKind::rw_env:
                break;
        }
    }

    const TransitionKernel& kernel_for(std::size_t k) {
        if (fixed_) return *fixed_;
        const StepLaw& law = wall_->env->laws.at(k);
        step_kernel_ = law.is_discrete() ? TransitionKernel::lattice(law, dx_)
                                         : TransitionKernel::gaussian(law.mean(), law.variance(), dx_);
        return step_kernel_;
    }

    const WallRealization* wall_;
    GridConfig cfg_;
    double x0_;
    double dx_ = 0.02;
    std::size_t index_;
    GridDensity state_;
    std::optional<TransitionKernel> fixed_;
    TransitionKernel step_kernel_;
};

/// Deterministic log p_N at each horizon (stderr 0). With a horizon-dependent offset g the
/// start is g(N) and each horizon is propagated separately.
inline SurvivalCurve grid_survival(const WallRealization& wall, double x0, const std::vector<double>& horizons,
                                   const EndWindow& window, const GridConfig& cfg) {
    require(!horizons.empty(), ErrorKind::invalid_input, "no horizons");
    require(horizons.back() <= wall.horizon + 1e-9, ErrorKind::out_of_range, "wall horizon shorter than horizons");
    SurvivalCurve curve;
    curve.wall_id = wall.seed.stream;
    curve.seed = wall.seed.seed;
    auto emit = [&](double h, const GridRun& run) {
        SurvivalPoint p;
        p.horizon = h;
        p.estimator = "grid";
        p.logp = run.log_survival(window);
        if (run.density().died) {
            p.died = true;
            p.note = "died";
        } else if (p.logp == neg_inf) {
            p.note = "window-empty";
        }
        curve.add(p);
    };
    const auto& offset = wall.spec.offset;
    if (offset && !offset->is_constant()) {
        for (double h : horizons) {
            GridRun run(wall, cfg, (*offset)(h));
            run.advance_to(wall.step_index(h));
            emit(h, run);
        }
        return curve;
    }
    GridRun run(wall, cfg, offset ? offset->level : x0);
    for (double h : horizons) {
        run.advance_to(wall.step_index(h));
        emit(h, run);
    }
    return curve;
}

}  // namespace persist
