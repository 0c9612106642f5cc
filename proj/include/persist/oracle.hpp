#pragma once

// Exhaustive enumeration over finite-support walks: the exact survival
// oracle and the brute-force FKG check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "persist/error.hpp"
#include "persist/step_law.hpp"
#include "persist/survival.hpp"

namespace persist {

inline constexpr double enumeration_limit = 67108864.0;  // 2^26 step sequences

inline void require_enumerable(const StepLaw& law, std::size_t n) {
    require(law.is_discrete(), ErrorKind::invalid_input, "exhaustive enumeration needs a finite-support law");
    require(n <= 24, ErrorKind::size_limit, "N must be <= 24");
    const double size = std::pow(static_cast<double>(law.as_discrete().values.size()), static_cast<double>(n));
    require(size <= enumeration_limit, ErrorKind::size_limit, "|support|^N exceeds 2^26");
}

/// Exact P(x0 + B_n >= wall[n] for n = 0..N, window at N) by summing over every step sequence
/// (dead prefixes contribute zero and are not extended). wall must have N + 1 entries.
inline double brute_force_survival(const StepLaw& law, const std::vector<double>& wall, double x0, std::size_t N,
                                   const EndWindow& window) {
    require_enumerable(law, N);
    require(wall.size() >= N + 1, ErrorKind::invalid_input, "wall needs N + 1 values");
    const auto& d = law.as_discrete();
    if (x0 < wall[0]) return 0.0;
    long double total = 0.0L;
    std::function<void(std::size_t, double, long double)> walk = [&](std::size_t n, double b, long double w) {
        if (n == N) {
            const double t = static_cast<double>(N);
            if (window.contains(x0 + b, wall[N], x0, t)) total += w;
            return;
        }
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            if (d.probs[i] == 0.0) continue;
            const double nb = b + d.values[i];
            if (x0 + nb < wall[n + 1]) continue;
            walk(n + 1, nb, w * static_cast<long double>(d.probs[i]));
        }
    };
    walk(0, 0.0, 1.0L);
    return static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// FKG

/// {B_index >= threshold} or, when increasing is false, {B_index <= threshold}.
struct ThresholdAtom {
    std::size_t index = 1;  // 1-based path coordinate
    double threshold = 0.0;
    bool increasing = true;
};

/// Union of intersections of threshold atoms; the empty union is the empty event and an empty
/// clause is the full space.
struct MonotoneEvent {
    std::vector<std::vector<ThresholdAtom>> clauses;

    static MonotoneEvent full_space() { return {{{}}}; }

    bool holds(const std::vector<double>& path) const {
        for (const auto& clause : clauses) {
            bool all = true;
            for (const auto& a : clause) {
                const double v = path[a.index - 1];
                if (a.increasing ? v < a.threshold : v > a.threshold) {
                    all = false;
                    break;
                }
            }
            if (all) return true;
        }
        return false;
    }

    void validate(std::size_t n) const {
        for (const auto& clause : clauses)
            for (const auto& a : clause) {
                require(a.increasing, ErrorKind::invalid_event, "event contains a decreasing atom");
                require(a.index >= 1 && a.index <= n, ErrorKind::invalid_event, "atom index outside 1..N");
            }
    }
};

struct FkgResult {
    double p_ab = 0.0, p_a = 0.0, p_b = 0.0;
    bool holds = false;
};

inline FkgResult fkg_brute_check(const StepLaw& law, std::size_t N, const MonotoneEvent& A, const MonotoneEvent& B) {
    require(N >= 1 && N <= 12, ErrorKind::size_limit, "FKG check supports 1 <= N <= 12");
    require_enumerable(law, N);
    A.validate(N);
    B.validate(N);
    const auto& d = law.as_discrete();
    long double pa = 0, pb = 0, pab = 0;
    std::vector<double> path(N);
    std::function<void(std::size_t, double, long double)> walk = [&](std::size_t n, double b, long double w) {
        if (n == N) {
            const bool a = A.holds(path), bb = B.holds(path);
            if (a) pa += w;
            if (bb) pb += w;
            if (a && bb) pab += w;
            return;
        }
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            path[n] = b + d.values[i];
            walk(n + 1, path[n], w * static_cast<long double>(d.probs[i]));
        }
    };
    walk(0, 0.0, 1.0L);
    FkgResult r{static_cast<double>(pab), static_cast<double>(pa), static_cast<double>(pb), false};
    r.holds = r.p_ab >= r.p_a * r.p_b - 1e-12;
    return r;
}

}  // namespace persist
