#pragma once

#include <cmath>
#include <vector>

#include "persist/walls.hpp"

namespace persist::test {

/// Integer-time wall with the given values at n = 0..N.
inline WallRealization fixed_wall(const std::vector<double>& values) {
    WallRealization w;
    w.spec = WallSpec::random_walk(StepLaw::rademacher(), 1.0);
    w.horizon = static_cast<double>(values.size() - 1);
    w.values = PathSample{TimeGrid::uniform(1.0, values.size() - 1), values};
    w.underlying = w.values;
    return w;
}

/// Independent path enumeration: P(x0 + S_n >= wall[n] for n = 0..N and lo < S_N - wall[N] < hi).
inline double enumerate_survival(const std::vector<double>& steps, const std::vector<double>& probs,
                                 const std::vector<double>& wall, double x0, std::size_t N, double lo = -INFINITY,
                                 double hi = INFINITY) {
    if (x0 < wall[0]) return 0.0;
    double total = 0.0;
    const std::size_t k = steps.size();
    std::size_t paths = 1;
    for (std::size_t i = 0; i < N; ++i) paths *= k;
    for (std::size_t code = 0; code < paths; ++code) {
        std::size_t c = code;
        double x = x0, p = 1.0;
        bool alive = true;
        for (std::size_t n = 1; n <= N && alive; ++n) {
            x += steps[c % k];
            p *= probs[c % k];
            c /= k;
            alive = x >= wall[n];
        }
        if (alive && x - x0 - wall[N] > lo && x - x0 - wall[N] < hi) total += p;
    }
    return total;
}

}  // namespace persist::test
