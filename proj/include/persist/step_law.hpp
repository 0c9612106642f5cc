#pragma once

// One-step laws used by random walks, walls, tilting and the exhaustive oracle.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "persist/error.hpp"
#include "persist/math.hpp"
#include "persist/rng.hpp"

namespace persist {

struct GaussianLaw {
    double mean = 0.0;
    double sd = 1.0;
};

/// Finite-support law; values need not be sorted, probabilities must sum to 1.
struct DiscreteLaw {
    std::vector<double> values;
    std::vector<double> probs;
};

class StepLaw {
public:
    StepLaw() : law_(GaussianLaw{}) {}
    StepLaw(GaussianLaw g) : law_(g) {
        require(std::isfinite(g.mean) && std::isfinite(g.sd) && g.sd >= 0.0, ErrorKind::invalid_model,
                "gaussian law needs finite mean and sd >= 0");
    }
    StepLaw(DiscreteLaw d) : law_(std::move(d)) {
        const auto& dl = std::get<DiscreteLaw>(law_);
        require(!dl.values.empty() && dl.values.size() == dl.probs.size(), ErrorKind::invalid_model,
                "discrete law needs matching non-empty values/probs");
        double total = 0.0;
        for (std::size_t i = 0; i < dl.values.size(); ++i) {
            require(std::isfinite(dl.values[i]) && dl.probs[i] >= 0.0, ErrorKind::invalid_model,
                    "discrete law has non-finite value or negative probability");
            total += dl.probs[i];
        }
        require(std::abs(total - 1.0) < 1e-12, ErrorKind::invalid_model, "discrete probabilities must sum to 1");
    }

    static StepLaw gaussian(double mean, double sd) { return StepLaw(GaussianLaw{mean, sd}); }
    static StepLaw rademacher() { return StepLaw(DiscreteLaw{{-1.0, 1.0}, {0.5, 0.5}}); }
    static StepLaw two_point(double lo, double hi, double p_hi) {
        return StepLaw(DiscreteLaw{{lo, hi}, {1.0 - p_hi, p_hi}});
    }

    bool is_gaussian() const { return std::holds_alternative<GaussianLaw>(law_); }
    bool is_discrete() const { return std::holds_alternative<DiscreteLaw>(law_); }
    const GaussianLaw& as_gaussian() const { return std::get<GaussianLaw>(law_); }
    const DiscreteLaw& as_discrete() const { return std::get<DiscreteLaw>(law_); }

    double mean() const {
        if (is_gaussian()) return as_gaussian().mean;
        const auto& d = as_discrete();
        return std::inner_product(d.values.begin(), d.values.end(), d.probs.begin(), 0.0);
    }

    double variance() const {
        if (is_gaussian()) return as_gaussian().sd * as_gaussian().sd;
        const auto& d = as_discrete();
        const double m = mean();
        double v = 0.0;
        for (std::size_t i = 0; i < d.values.size(); ++i) v += d.probs[i] * (d.values[i] - m) * (d.values[i] - m);
        return v;
    }

    /// Supremum of the support; +inf for Gaussian laws with sd > 0.
    double support_sup() const {
        if (is_gaussian()) return as_gaussian().sd > 0 ? pos_inf : as_gaussian().mean;
        const auto& d = as_discrete();
        double s = neg_inf;
        for (std::size_t i = 0; i < d.values.size(); ++i)
            if (d.probs[i] > 0) s = std::max(s, d.values[i]);
        return s;
    }

    double support_inf() const {
        if (is_gaussian()) return as_gaussian().sd > 0 ? neg_inf : as_gaussian().mean;
        const auto& d = as_discrete();
        double s = pos_inf;
        for (std::size_t i = 0; i < d.values.size(); ++i)
            if (d.probs[i] > 0) s = std::min(s, d.values[i]);
        return s;
    }

    bool bounded() const { return std::isfinite(support_sup()) && std::isfinite(support_inf()); }

    /// Same law shifted by `delta`.
    StepLaw shifted(double delta) const {
        if (is_gaussian()) return gaussian(as_gaussian().mean + delta, as_gaussian().sd);
        DiscreteLaw d = as_discrete();
        for (auto& v : d.values) v += delta;
        return StepLaw(std::move(d));
    }

    StepLaw scaled(double factor) const {
        if (is_gaussian()) return gaussian(as_gaussian().mean * factor, as_gaussian().sd * std::abs(factor));
        DiscreteLaw d = as_discrete();
        for (auto& v : d.values) v *= factor;
        return StepLaw(std::move(d));
    }

    double sample(Rng& rng) const {
        if (is_gaussian()) return rng.normal(as_gaussian().mean, as_gaussian().sd);
        const auto& d = as_discrete();
        double u = rng.uniform();
        for (std::size_t i = 0; i + 1 < d.values.size(); ++i) {
            if (u < d.probs[i]) return d.values[i];
            u -= d.probs[i];
        }
        return d.values.back();
    }

    std::string describe() const {
        if (is_gaussian()) {
            return "gaussian(" + std::to_string(as_gaussian().mean) + "," + std::to_string(as_gaussian().sd) + ")";
        }
        std::string s = "discrete(";
        const auto& d = as_discrete();
        for (std::size_t i = 0; i < d.values.size(); ++i) {
            if (i) s += ";";
            s += std::to_string(d.values[i]) + ":" + std::to_string(d.probs[i]);
        }
        return s + ")";
    }

private:
    std::variant<GaussianLaw, DiscreteLaw> law_;
};

}  // namespace persist
