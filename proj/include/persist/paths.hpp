#pragma once

// Exact samplers for Brownian motion and Ornstein-Uhlenbeck processes on
// arbitrary time grids, the OU/BM time-change, and the Brownian-bridge
// barrier correction used by the survival engine.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/rng.hpp"

namespace persist {

class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
        require(!times_.empty(), ErrorKind::invalid_input, "time grid must be non-empty");
        require(std::isfinite(times_[0]) && times_[0] >= 0.0, ErrorKind::invalid_input,
                "time grid must start at a non-negative time");
        for (std::size_t i = 1; i < times_.size(); ++i)
            require(std::isfinite(times_[i]) && times_[i] > times_[i - 1], ErrorKind::invalid_input,
                    "time grid must be strictly increasing");
    }

    /// 0, dt, 2dt, ..., n*dt.
    static TimeGrid uniform(double dt, std::size_t steps) {
        require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_input, "dt must be positive");
        std::vector<double> t(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i) t[i] = dt * static_cast<double>(i);
        return TimeGrid(std::move(t));
    }

    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }
    double operator[](std::size_t i) const { return times_[i]; }
    double front() const { return times_.front(); }
    double back() const { return times_.back(); }
    std::span<const double> times() const { return times_; }

    /// Step if the grid is uniform (relative tolerance 1e-9), otherwise 0.
    double uniform_step() const {
        if (times_.size() < 2) return 0.0;
        const double dt = times_[1] - times_[0];
        for (std::size_t i = 2; i < times_.size(); ++i)
            if (std::abs((times_[i] - times_[i - 1]) - dt) > 1e-9 * dt) return 0.0;
        return dt;
    }

private:
    std::vector<double> times_;
};

struct PathSample {
    TimeGrid grid;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    /// Linear interpolation at time t; throws out-of-range outside the grid.
    double at(double t) const {
        const auto ts = grid.times();
        require(!ts.empty() && t >= ts.front() - 1e-12 && t <= ts.back() + 1e-12, ErrorKind::out_of_range,
                "time outside path horizon");
        if (t <= ts.front()) return values.front();
        if (t >= ts.back()) return values.back();
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
        return values[lo] + w * (values[hi] - values[lo]);
    }
};

struct OuParams {
    double mu = 1.0;
    double sigma = 1.0;

    void validate() const {
        require(mu > 0.0 && std::isfinite(mu), ErrorKind::invalid_input, "OU rate mu must be > 0");
        require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::invalid_input, "OU sigma must be > 0");
    }

    double stationary_variance() const { return sigma * sigma / (2.0 * mu); }

    /// Mean and variance of X_{t+dt} given X_t = x.
    std::pair<double, double> transition(double x, double dt) const {
        const double decay = std::exp(-mu * dt);
        return {x * decay, sigma * sigma * (-std::expm1(-2.0 * mu * dt)) / (2.0 * mu)};
    }
};

/// Standard Brownian motion on `grid`, started at 0 at time 0.
inline PathSample sample_bm(const TimeGrid& grid, Rng& rng) {
    require(!grid.empty(), ErrorKind::invalid_input, "empty grid");
    PathSample out{grid, std::vector<double>(grid.size())};
    double x = grid[0] > 0.0 ? rng.normal(0.0, std::sqrt(grid[0])) : 0.0;
    out.values[0] = x;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        x += rng.normal(0.0, std::sqrt(grid[i] - grid[i - 1]));
        out.values[i] = x;
    }
    return out;
}

inline PathSample sample_bm(const TimeGrid& grid, RngStream stream) {
    Rng rng(stream);
    return sample_bm(grid, rng);
}

/// OU path from x0 (at time grid[0]) using the exact Gaussian transition law.
inline PathSample sample_ou(const OuParams& p, double x0, const TimeGrid& grid, Rng& rng) {
    p.validate();
    require(!grid.empty(), ErrorKind::invalid_input, "empty grid");
    PathSample out{grid, std::vector<double>(grid.size())};
    double x = x0;
    out.values[0] = x;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto [m, v] = p.transition(x, grid[i] - grid[i - 1]);
        x = m + std::sqrt(v) * rng.normal();
        out.values[i] = x;
    }
    return out;
}

inline PathSample sample_ou(const OuParams& p, double x0, const TimeGrid& grid, RngStream stream) {
    Rng rng(stream);
    return sample_ou(p, x0, grid, rng);
}

/// X_t = x e^{-mu t} + sigma/sqrt(2 mu) e^{-mu t} W_{e^{2 mu t} - 1}, with W read from `bm`
/// by linear interpolation.
inline double ou_from_bm(double x, double mu, double sigma, double t, const PathSample& bm) {
    require(mu > 0.0 && sigma > 0.0 && t >= 0.0, ErrorKind::invalid_input, "need mu, sigma > 0 and t >= 0");
    const double s = std::expm1(2.0 * mu * t);
    require(!bm.grid.empty() && bm.grid.back() >= s - 1e-12 * std::max(1.0, s), ErrorKind::out_of_range,
            "brownian path horizon shorter than e^{2 mu t} - 1");
    const double w = s == 0.0 ? 0.0 : bm.at(std::min(s, bm.grid.back()));
    const double decay = std::exp(-mu * t);
    return x * decay + sigma / std::sqrt(2.0 * mu) * decay * w;
}

/// Probability that a Brownian bridge with variance rate `var_rate` over a step `dt`,
/// starting a above and ending b above a linear barrier, never touches it.
inline double bridge_noncrossing(double a, double b, double dt, double var_rate) {
    if (!(a > 0.0) || !(b > 0.0)) return 0.0;
    return -std::expm1(-2.0 * a * b / (var_rate * dt));
}

}  // namespace persist
