#pragma once

// Shared vocabulary of the survival estimators: the walker process, the
// terminal window, and the survival curve they all produce.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/paths.hpp"
#include "persist/step_law.hpp"
#include "persist/walls.hpp"

namespace persist {

enum class ProcessKind { bm, ou, rw, rw_env };

inline const char* to_string(ProcessKind k) {
    switch (k) {
        case ProcessKind::bm: return "bm";
        case ProcessKind::ou: return "ou";
        case ProcessKind::rw: return "rw";
        case ProcessKind::rw_env: return "rw-env";
    }
    return "?";
}

/// The walker X = x0 + B (or an OU started at x0). For rw-env the steps come from the
/// wall's environment and the walker is x0 + S with the barrier reduced to f.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::bm;
    OuParams ou{1.0, 1.0};
    StepLaw step = StepLaw::gaussian(0, 1);

    static ProcessSpec brownian() { return {}; }
    static ProcessSpec ornstein_uhlenbeck(double mu, double sigma = 1.0) {
        ProcessSpec p;
        p.kind = ProcessKind::ou;
        p.ou = {mu, sigma};
        return p;
    }
    static ProcessSpec random_walk(StepLaw step) {
        ProcessSpec p;
        p.kind = ProcessKind::rw;
        p.step = std::move(step);
        return p;
    }
    static ProcessSpec environment_walk() {
        ProcessSpec p;
        p.kind = ProcessKind::rw_env;
        return p;
    }

    bool integer_time() const { return kind == ProcessKind::rw || kind == ProcessKind::rw_env; }
};

/// Terminal condition on D = X_t - wall(t): for sqrt-horizon scale D - x0 in (a sqrt t, b sqrt t),
/// for constant scale D in (a, b). Both ends are strict.
struct EndWindow {
    enum class Scale { sqrt_horizon, constant };

    double a = 0.0;
    double b = pos_inf;
    Scale scale = Scale::constant;
    bool enabled = false;

    static EndWindow none() { return {}; }
    static EndWindow sqrt_scaled(double a, double b) { return make(a, b, Scale::sqrt_horizon); }
    static EndWindow constant_scaled(double a, double b) { return make(a, b, Scale::constant); }

    bool contains(double x, double wall_value, double x0, double t) const {
        if (!enabled) return true;
        if (scale == Scale::constant) {
            const double d = x - wall_value;
            return d > a && d < b;
        }
        const double d = x - x0 - wall_value;
        const double r = std::sqrt(t);
        return d > a * r && (b == pos_inf || d < b * r);
    }

private:
    static EndWindow make(double a, double b, Scale s) {
        require(a < b, ErrorKind::invalid_input, "end window needs a < b");
        EndWindow w;
        w.a = a;
        w.b = b;
        w.scale = s;
        w.enabled = true;
        return w;
    }
};

struct SurvivalPoint {
    double horizon = 0.0;
    double logp = 0.0;
    double stderr_ = 0.0;
    std::string estimator;
    bool died = false;
    std::string note;
};

struct SurvivalCurve {
    std::vector<SurvivalPoint> entries;
    std::uint64_t wall_id = 0;
    std::uint64_t seed = 0;

    void add(SurvivalPoint p) {
        require(entries.empty() || p.horizon > entries.back().horizon, ErrorKind::invalid_input,
                "survival horizons must increase");
        entries.push_back(std::move(p));
    }

    std::size_t size() const { return entries.size(); }
    bool any_died() const {
        for (const auto& e : entries)
            if (e.died || e.logp == neg_inf) return true;
        return false;
    }
};

inline void write_curve_csv_header(std::ostream& os) { os << "horizon,logp,stderr,estimator,wall_id,seed\n"; }

inline void write_curve_csv(std::ostream& os, const SurvivalCurve& c) {
    for (const auto& e : c.entries) {
        os << std::setprecision(17) << e.horizon << ",";
        if (e.logp == neg_inf)
            os << "-inf";
        else
            os << e.logp;
        os << "," << e.stderr_ << "," << e.estimator << "," << c.wall_id << "," << c.seed << "\n";
    }
}

/// Horizons 2^lo, ..., 2^hi.
inline std::vector<double> dyadic_horizons(int lo, int hi) {
    std::vector<double> h;
    for (int k = lo; k <= hi; ++k) h.push_back(std::ldexp(1.0, k));
    return h;
}

}  // namespace persist
