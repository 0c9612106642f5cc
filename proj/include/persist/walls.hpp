#pragma once

// Quenched walls: specification, realization, perturbation and feasibility.
// A realization is sampled once and then treated as frozen; every estimator
// run against it sees the same values.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "persist/environment.hpp"
#include "persist/error.hpp"
#include "persist/paths.hpp"
#include "persist/rng.hpp"
#include "persist/step_law.hpp"

namespace persist {

enum class WallKind { zero, scaled_brownian, scaled_ou, random_walk, iid, environment };

inline const char* to_string(WallKind k) {
    switch (k) {
        case WallKind::zero: return "zero";
        case WallKind::scaled_brownian: return "scaled-brownian";
        case WallKind::scaled_ou: return "scaled-ou";
        case WallKind::random_walk: return "random-walk";
        case WallKind::iid: return "iid";
        case WallKind::environment: return "environment";
    }
    return "?";
}

/// f(t) = amplitude * t^{1/2 - eps}, or a table interpolated linearly (held constant past the end).
struct Perturbation {
    double amplitude = 0.0;
    double eps = 0.1;
    std::vector<double> table_times;
    std::vector<double> table_values;

    static Perturbation power(double amplitude, double eps) {
        Perturbation p;
        p.amplitude = amplitude;
        p.eps = eps;
        return p;
    }

    bool is_table() const { return !table_times.empty(); }

    double operator()(double t) const {
        if (is_table()) {
            if (t <= table_times.front()) return table_values.front();
            if (t >= table_times.back()) return table_values.back();
            const auto it = std::upper_bound(table_times.begin(), table_times.end(), t);
            const auto hi = static_cast<std::size_t>(it - table_times.begin());
            const double w = (t - table_times[hi - 1]) / (table_times[hi] - table_times[hi - 1]);
            return table_values[hi - 1] + w * (table_values[hi] - table_values[hi - 1]);
        }
        return t <= 0.0 ? 0.0 : amplitude * std::pow(t, 0.5 - eps);
    }

    void validate() const {
        if (is_table()) {
            require(table_times.size() == table_values.size() && table_times.front() == 0.0 &&
                        table_values.front() == 0.0,
                    ErrorKind::invalid_spec, "perturbation table must start at (0, 0)");
            for (std::size_t i = 1; i < table_times.size(); ++i)
                require(table_times[i] > table_times[i - 1], ErrorKind::invalid_spec,
                        "perturbation table times must increase");
        } else {
            require(eps > 0.0 && eps <= 0.5 && std::isfinite(amplitude), ErrorKind::invalid_spec,
                    "perturbation needs 0 < eps <= 1/2 and finite amplitude");
        }
    }
};

/// g(t) = level * (1 + log(1 + t))^growth; inf g = level > 0 and log g(t) / log t -> 0.
struct Offset {
    double level = 1.0;
    double growth = 0.0;

    bool is_constant() const { return growth == 0.0; }
    double operator()(double t) const { return level * std::pow(1.0 + std::log1p(std::max(t, 0.0)), growth); }

    void validate() const {
        require(level > 0.0 && std::isfinite(level), ErrorKind::invalid_spec, "offset needs inf g > 0");
        require(growth >= 0.0 && std::isfinite(growth), ErrorKind::invalid_spec, "offset growth must be >= 0");
    }
};

struct WallSpec {
    WallKind kind = WallKind::zero;
    double beta = 1.0;
    OuParams ou{1.0, 1.0};                 // scaled-ou
    StepLaw law = StepLaw::gaussian(0, 1);  // random-walk step law, or iid marginal
    EnvModel env;                          // environment
    double dt = 1.0 / 64.0;                // sampling step for continuous kinds
    std::optional<Perturbation> perturbation;
    std::optional<Offset> offset;

    static WallSpec zero() { return {}; }
    static WallSpec brownian(double beta, double dt = 1.0 / 64.0) {
        WallSpec s;
        s.kind = WallKind::scaled_brownian;
        s.beta = beta;
        s.dt = dt;
        return s;
    }
    static WallSpec ou_wall(double mu, double sigma, double beta, double dt = 1.0 / 64.0) {
        WallSpec s;
        s.kind = WallKind::scaled_ou;
        s.ou = {mu, sigma};
        s.beta = beta;
        s.dt = dt;
        return s;
    }
    static WallSpec random_walk(StepLaw step, double beta) {
        WallSpec s;
        s.kind = WallKind::random_walk;
        s.law = std::move(step);
        s.beta = beta;
        s.dt = 1.0;
        return s;
    }
    static WallSpec iid(StepLaw marginal) {
        WallSpec s;
        s.kind = WallKind::iid;
        s.law = std::move(marginal);
        s.beta = 1.0;
        s.dt = 1.0;
        return s;
    }
    static WallSpec environment(EnvModel model) {
        WallSpec s;
        s.kind = WallKind::environment;
        s.env = std::move(model);
        s.beta = 1.0;
        s.dt = 1.0;
        return s;
    }

    /// Discrete kinds live on integer times and are monitored only there.
    bool integer_time() const {
        return kind == WallKind::random_walk || kind == WallKind::iid || kind == WallKind::environment;
    }

    void validate() const {
        require(std::isfinite(beta), ErrorKind::invalid_spec, "beta must be finite");
        require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_spec, "dt must be > 0");
        if (integer_time()) require(dt == 1.0, ErrorKind::invalid_spec, "discrete walls use unit time steps");
        if (kind == WallKind::scaled_ou) {
            require(ou.mu > 0 && ou.sigma > 0, ErrorKind::invalid_spec, "OU wall needs mu, sigma > 0");
        }
        if (kind == WallKind::random_walk)
            require(std::abs(law.mean()) < 1e-12, ErrorKind::invalid_spec, "random-walk wall steps must be centered");
        if (kind == WallKind::environment) {
            try {
                env.validate();
            } catch (const Error& e) {
                throw Error(ErrorKind::invalid_spec, e.what());
            }
            require(!offset || offset->is_constant(), ErrorKind::invalid_spec,
                    "environment walls support only constant offsets");
        }
        if (perturbation) perturbation->validate();
        if (offset) offset->validate();
    }
};

struct WallRealization {
    WallSpec spec;
    double horizon = 0.0;
    PathSample values;                 // beta * W (or Y); raw wall, f and g not applied
    PathSample underlying;             // unscaled W; equals values when beta is not applicable
    std::optional<EnvRealization> env; // environment kind only
    RngStream seed;

    /// Raw wall value at time t.
    double at(double t) const {
        require(t <= horizon + 1e-9 && t >= -1e-12, ErrorKind::out_of_range, "time beyond wall horizon");
        return values.at(std::min(t, values.grid.back()));
    }

    /// Number of grid steps from 0 to t (t must be a grid point).
    std::size_t step_index(double t) const {
        const double k = t / spec.dt;
        const double r = std::round(k);
        require(std::abs(k - r) < 1e-9 * std::max(1.0, k), ErrorKind::invalid_input,
                "time is not on the wall grid");
        return static_cast<std::size_t>(r);
    }
};

inline WallRealization realize_wall(const WallSpec& spec, double horizon, RngStream stream) {
    spec.validate();
    require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::invalid_input, "horizon must be > 0");
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / spec.dt - 1e-9));
    const TimeGrid grid = TimeGrid::uniform(spec.dt, steps);
    Rng rng(stream);
    WallRealization w;
    w.spec = spec;
    w.horizon = horizon;
    w.seed = stream;
    w.underlying = PathSample{grid, std::vector<double>(grid.size(), 0.0)};
    switch (spec.kind) {
        case WallKind::zero:
            break;
        case WallKind::scaled_brownian:
            w.underlying = sample_bm(grid, rng);
            break;
        case WallKind::scaled_ou:
            w.underlying = sample_ou(spec.ou, 0.0, grid, rng);
            break;
        case WallKind::random_walk:
            for (std::size_t i = 1; i < grid.size(); ++i)
                w.underlying.values[i] = w.underlying.values[i - 1] + spec.law.sample(rng);
            break;
        case WallKind::iid:
            for (std::size_t i = 1; i < grid.size(); ++i) w.underlying.values[i] = spec.law.sample(rng);
            break;
        case WallKind::environment:
            w.env = sample_env(spec.env, steps, rng);
            w.underlying.values = w.env->wall;
            break;
    }
    const bool scaled = spec.kind == WallKind::scaled_brownian || spec.kind == WallKind::scaled_ou ||
                        spec.kind == WallKind::random_walk;
    w.values = w.underlying;
    if (scaled)
        for (auto& v : w.values.values) v *= spec.beta;
    return w;
}

/// Effective barrier beta*W_t + f(t).
inline double apply_perturbation(const WallRealization& wall, double t) {
    require(t <= wall.horizon + 1e-9, ErrorKind::out_of_range, "time beyond wall horizon");
    const double base = wall.at(t);
    return wall.spec.perturbation ? base + (*wall.spec.perturbation)(t) : base;
}

// ---------------------------------------------------------------------------
// Feasibility

enum class FeasibilityStatus { always_feasible, feasible_at_x, infeasible };

inline const char* to_string(FeasibilityStatus s) {
    switch (s) {
        case FeasibilityStatus::always_feasible: return "always-feasible";
        case FeasibilityStatus::feasible_at_x: return "feasible-at-x";
        case FeasibilityStatus::infeasible: return "infeasible";
    }
    return "?";
}

struct Feasibility {
    FeasibilityStatus status = FeasibilityStatus::always_feasible;
    std::optional<std::size_t> witness;  // first blocking index, realization checks only
};

/// Supremum of the support of the wall's one-step increment (or marginal, for iid walls).
inline double wall_step_sup(const WallSpec& w) {
    switch (w.kind) {
        case WallKind::zero: return 0.0;
        case WallKind::scaled_brownian:
        case WallKind::scaled_ou: return w.beta == 0.0 ? 0.0 : pos_inf;
        case WallKind::random_walk: {
            if (w.beta == 0.0) return 0.0;
            return w.beta > 0 ? w.beta * w.law.support_sup() : w.beta * w.law.support_inf();
        }
        case WallKind::iid: return w.law.support_sup();
        case WallKind::environment: return w.env.wall_step_sup();
    }
    return pos_inf;
}

/// Realization-free support test: always-feasible iff sup S_B >= sup S_W. A failing test is
/// reported as infeasible (no witness), meaning P(A_x) < 1 for every x.
inline Feasibility check_feasibility(const StepLaw& walk_step, const WallSpec& wall, double x) {
    require(std::isfinite(x), ErrorKind::invalid_input, "x must be finite");
    const double sb = walk_step.support_sup();
    if (!std::isfinite(sb)) return {FeasibilityStatus::always_feasible, std::nullopt};
    const double sw = wall_step_sup(wall);
    if (sb >= sw) return {FeasibilityStatus::always_feasible, std::nullopt};
    return {FeasibilityStatus::infeasible, std::nullopt};
}

/// Realization check on integer times: the pointwise-highest path x + n * sup S_B dominates every
/// other path, so A_x holds up to the horizon iff it clears the barrier at every n.
inline Feasibility check_feasibility(const StepLaw& walk_step, const WallRealization& wall, double x) {
    const Feasibility base = check_feasibility(walk_step, wall.spec, x);
    if (base.status == FeasibilityStatus::always_feasible) return base;
    require(wall.spec.integer_time(), ErrorKind::invalid_input, "realization feasibility needs an integer-time wall");
    const double sb = walk_step.support_sup();
    const std::size_t n_max = wall.step_index(wall.horizon);
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double t = static_cast<double>(n);
        if (x + t * sb < apply_perturbation(wall, t)) return {FeasibilityStatus::infeasible, n};
    }
    return {FeasibilityStatus::feasible_at_x, std::nullopt};
}

// ---------------------------------------------------------------------------
// Text record: "persist-wall/1" header, key/value lines, then one value per grid point.
// Re-realizing from (spec, seed, horizon) reproduces the values bit-exactly.

namespace detail {
inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}
}  // namespace detail

inline void write_wall(std::ostream& os, const WallRealization& w, const std::string& spec_text) {
    os << "schema persist-wall/1\n";
    os << "spec " << spec_text << "\n";
    os << "kind " << to_string(w.spec.kind) << "\n";
    os << "seed " << w.seed.seed << "\n";
    os << "stream " << w.seed.stream << "\n";
    os << "horizon " << detail::fmt_double(w.horizon) << "\n";
    os << "dt " << detail::fmt_double(w.spec.dt) << "\n";
    os << "points " << w.values.size() << "\n";
    for (std::size_t i = 0; i < w.values.size(); ++i)
        os << std::hexfloat << w.values.grid[i] << " " << w.values.values[i] << std::defaultfloat << "\n";
}

struct WallRecord {
    std::string spec_text;
    std::string kind;
    RngStream seed;
    double horizon = 0.0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> values;
};

inline WallRecord read_wall(std::istream& is) {
    WallRecord r;
    std::string key;
    std::size_t points = 0;
    std::string line;
    require(static_cast<bool>(std::getline(is, line)) && line == "schema persist-wall/1", ErrorKind::invalid_input,
            "not a persist-wall/1 record");
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        ls >> key;
        if (key == "spec") {
            std::getline(ls >> std::ws, r.spec_text);
        } else if (key == "kind") {
            ls >> r.kind;
        } else if (key == "seed") {
            ls >> r.seed.seed;
        } else if (key == "stream") {
            ls >> r.seed.stream;
        } else if (key == "horizon") {
            ls >> r.horizon;
        } else if (key == "dt") {
            ls >> r.dt;
        } else if (key == "points") {
            ls >> points;
            break;
        }
    }
    r.times.reserve(points);
    r.values.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_input, "truncated wall record");
        // hexfloat extraction via strtod handles the 0x...p... form.
        char* end = nullptr;
        const double t = std::strtod(line.c_str(), &end);
        const double v = std::strtod(end, nullptr);
        r.times.push_back(t);
        r.values.push_back(v);
    }
    return r;
}

}  // namespace persist
