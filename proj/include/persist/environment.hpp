#pragma once

// Random walks in a time-inhomogeneous random environment. An environment is
// an i.i.d. sequence of step laws mu_n; conditionally on it the steps X_n are
// independent with law mu_n, and
//   S_n = sum X_j,  W_n = -sum E(X_j | mu),  B_n = S_n + W_n.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "persist/error.hpp"
#include "persist/rng.hpp"
#include "persist/step_law.hpp"

namespace persist {

enum class EnvFamily {
    gaussian_random_mean,      // mu_n = N(m_n, step_sd^2), m_n ~ N(0, mean_sd^2)
    two_point_random_bias,     // mu_n = +-step with P(+) = p_n, p_n uniform on bias_values
    shifted_bernoulli_mixture  // mu_n = law of eta_n + Bernoulli(q) - q, eta_n uniform on {-shift, +shift}
};

inline const char* to_string(EnvFamily f) {
    switch (f) {
        case EnvFamily::gaussian_random_mean: return "gaussian-random-mean";
        case EnvFamily::two_point_random_bias: return "two-point-random-bias";
        case EnvFamily::shifted_bernoulli_mixture: return "shifted-bernoulli-mixture";
    }
    return "?";
}

struct EnvModel {
    EnvFamily family = EnvFamily::gaussian_random_mean;
    double step_sd = 1.0;                    // gaussian: conditional sd
    double mean_sd = 1.0;                    // gaussian: sd of the random mean
    double step = 1.0;                       // two-point: step size
    std::vector<double> bias_values{0.25, 0.75};  // two-point: support of p_n
    double bernoulli_q = 0.5;                // shifted-bernoulli: success probability
    double shift = 0.5;                      // shifted-bernoulli: shift magnitude

    void validate() const {
        switch (family) {
            case EnvFamily::gaussian_random_mean:
                require(std::isfinite(step_sd) && step_sd > 0.0, ErrorKind::invalid_model,
                        "conditional step sd must be > 0 (Var B_1 > 0, uniform exponential moment)");
                require(std::isfinite(mean_sd) && mean_sd >= 0.0, ErrorKind::invalid_model,
                        "random-mean sd must be finite and >= 0");
                break;
            case EnvFamily::two_point_random_bias: {
                require(std::isfinite(step) && step > 0.0, ErrorKind::invalid_model, "step must be > 0");
                require(!bias_values.empty(), ErrorKind::invalid_model, "bias values required");
                double mean_bias = 0.0;
                bool nondegenerate = false;
                for (double p : bias_values) {
                    require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_model, "bias values must lie in [0,1]");
                    mean_bias += p;
                    nondegenerate = nondegenerate || (p > 0.0 && p < 1.0);
                }
                mean_bias /= static_cast<double>(bias_values.size());
                require(std::abs(mean_bias - 0.5) < 1e-12, ErrorKind::invalid_model,
                        "bias values must average to 1/2 so that E W_1 = 0");
                require(nondegenerate, ErrorKind::invalid_model, "Var B_1 = 0: every realized law is a point mass");
                break;
            }
            case EnvFamily::shifted_bernoulli_mixture:
                require(bernoulli_q > 0.0 && bernoulli_q < 1.0, ErrorKind::invalid_model, "q must lie in (0,1)");
                require(std::isfinite(shift) && shift >= 0.0, ErrorKind::invalid_model, "shift must be >= 0");
                break;
        }
    }

    /// Var W_1 and Var B_1 of the annealed model.
    double var_wall() const {
        switch (family) {
            case EnvFamily::gaussian_random_mean: return mean_sd * mean_sd;
            case EnvFamily::two_point_random_bias: {
                double v = 0.0;
                for (double p : bias_values) v += (2 * p - 1) * (2 * p - 1);
                return step * step * v / static_cast<double>(bias_values.size());
            }
            case EnvFamily::shifted_bernoulli_mixture: return shift * shift;
        }
        return 0.0;
    }

    double var_walk() const {
        switch (family) {
            case EnvFamily::gaussian_random_mean: return step_sd * step_sd;
            case EnvFamily::two_point_random_bias: {
                double v = 0.0;
                for (double p : bias_values) v += 1.0 - (2 * p - 1) * (2 * p - 1);
                return step * step * v / static_cast<double>(bias_values.size());
            }
            case EnvFamily::shifted_bernoulli_mixture: return bernoulli_q * (1.0 - bernoulli_q);
        }
        return 0.0;
    }

    /// Union of the supports of the centered steps X_n - E(X_n | mu) and of the wall increments.
    double walk_step_sup() const {
        switch (family) {
            case EnvFamily::gaussian_random_mean: return pos_inf;
            case EnvFamily::two_point_random_bias: {
                double s = neg_inf;
                for (double p : bias_values)
                    if (p > 0.0) s = std::max(s, 2.0 * step * (1.0 - p));
                return s;
            }
            case EnvFamily::shifted_bernoulli_mixture: return 1.0 - bernoulli_q;
        }
        return pos_inf;
    }

    double wall_step_sup() const {
        switch (family) {
            case EnvFamily::gaussian_random_mean: return mean_sd > 0 ? pos_inf : 0.0;
            case EnvFamily::two_point_random_bias: {
                double s = neg_inf;
                for (double p : bias_values) s = std::max(s, -(2 * p - 1) * step);
                return s;
            }
            case EnvFamily::shifted_bernoulli_mixture: return shift;
        }
        return pos_inf;
    }

    std::string describe() const {
        std::string s = to_string(family);
        switch (family) {
            case EnvFamily::gaussian_random_mean:
                return s + "(step_sd=" + std::to_string(step_sd) + ",mean_sd=" + std::to_string(mean_sd) + ")";
            case EnvFamily::two_point_random_bias: {
                s += "(step=" + std::to_string(step) + ",p=";
                for (std::size_t i = 0; i < bias_values.size(); ++i)
                    s += (i ? "|" : "") + std::to_string(bias_values[i]);
                return s + ")";
            }
            case EnvFamily::shifted_bernoulli_mixture:
                return s + "(q=" + std::to_string(bernoulli_q) + ",shift=" + std::to_string(shift) + ")";
        }
        return s;
    }
};

/// One realized environment: the laws mu_1..mu_n and the quenched wall W_0..W_n.
struct EnvRealization {
    std::vector<StepLaw> laws;         // laws[n-1] is mu_n
    std::vector<double> conditional_means;
    std::vector<double> wall;          // wall[0] = 0, wall[n] = -sum_{j<=n} E(X_j | mu)

    /// S_0..S_n for one draw of the steps.
    std::vector<double> sample_walk(Rng& rng) const {
        std::vector<double> s(laws.size() + 1, 0.0);
        for (std::size_t n = 0; n < laws.size(); ++n) s[n + 1] = s[n] + laws[n].sample(rng);
        return s;
    }

    /// B_0..B_n = S + W for one draw.
    std::vector<double> sample_centered(Rng& rng) const {
        auto s = sample_walk(rng);
        for (std::size_t n = 0; n < s.size(); ++n) s[n] += wall[n];
        return s;
    }
};

inline EnvRealization sample_env(const EnvModel& model, std::size_t n, Rng& rng) {
    model.validate();
    EnvRealization env;
    env.laws.reserve(n);
    env.conditional_means.reserve(n);
    env.wall.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        StepLaw law;
        switch (model.family) {
            case EnvFamily::gaussian_random_mean:
                law = StepLaw::gaussian(model.mean_sd > 0 ? rng.normal(0.0, model.mean_sd) : 0.0, model.step_sd);
                break;
            case EnvFamily::two_point_random_bias: {
                const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(model.bias_values.size()));
                const double p = model.bias_values[std::min(k, model.bias_values.size() - 1)];
                law = StepLaw::two_point(-model.step, model.step, p);
                break;
            }
            case EnvFamily::shifted_bernoulli_mixture: {
                const double eta = rng.uniform() < 0.5 ? -model.shift : model.shift;
                law = StepLaw::two_point(eta - model.bernoulli_q, eta + 1.0 - model.bernoulli_q, model.bernoulli_q);
                break;
            }
        }
        const double m = law.mean();
        env.laws.push_back(std::move(law));
        env.conditional_means.push_back(m);
        env.wall[i + 1] = env.wall[i] - m;
    }
    return env;
}

inline EnvRealization sample_env(const EnvModel& model, std::size_t n, RngStream stream) {
    Rng rng(stream);
    return sample_env(model, n, rng);
}

}  // namespace persist
