#pragma once

// ExperimentConfig and its key = value text form (schema persist-config/1).
// Every field round-trips exactly: reals are written with 17 significant
// digits.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "persist/environment.hpp"
#include "persist/error.hpp"
#include "persist/excursions.hpp"
#include "persist/exponent.hpp"
#include "persist/grid_engine.hpp"
#include "persist/survival.hpp"
#include "persist/walls.hpp"

namespace persist {

inline constexpr const char* config_schema = "persist-config/1";

// ---------------------------------------------------------------------------
// scalar and list helpers

inline std::string fmt_real(double v) {
    if (v == pos_inf) return "inf";
    if (v == neg_inf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& text, const std::string& what = "number") {
    const std::string s = trim(text);
    if (s == "inf" || s == "+inf") return pos_inf;
    if (s == "-inf") return neg_inf;
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && p == s.data() + s.size() && !s.empty(), ErrorKind::invalid_input,
            "cannot parse " + what + " from '" + text + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& what = "integer") {
    const std::string s = trim(text);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && p == s.data() + s.size() && !s.empty(), ErrorKind::invalid_input,
            "cannot parse " + what + " from '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& text) {
    const std::string s = trim(text);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Error(ErrorKind::invalid_input, "cannot parse boolean from '" + text + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

/// "name(args)" -> {name, args}; a bare "name" gives empty args.
inline std::pair<std::string, std::string> split_call(const std::string& text) {
    const std::string s = trim(text);
    const auto open = s.find('(');
    if (open == std::string::npos) return {s, ""};
    require(s.back() == ')', ErrorKind::invalid_input, "unbalanced parentheses in '" + text + "'");
    return {trim(s.substr(0, open)), s.substr(open + 1, s.size() - open - 2)};
}

inline std::vector<double> parse_reals(const std::string& s, char sep = ',') {
    std::vector<double> v;
    for (const auto& p : split(s, sep)) v.push_back(parse_real(p));
    return v;
}

inline std::string join_reals(const std::vector<double>& v, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += fmt_real(v[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// step laws: normal(m,sd) | rademacher | discrete(v:p;v:p;...)

inline std::string format_law(const StepLaw& law) {
    if (law.is_gaussian()) return "normal(" + fmt_real(law.as_gaussian().mean) + "," + fmt_real(law.as_gaussian().sd) + ")";
    const auto& d = law.as_discrete();
    std::string s = "discrete(";
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        if (i) s += ";";
        s += fmt_real(d.values[i]) + ":" + fmt_real(d.probs[i]);
    }
    return s + ")";
}

inline StepLaw parse_law(const std::string& text) {
    const auto [name, args] = split_call(text);
    if (name == "rademacher") return StepLaw::rademacher();
    if (name == "normal" || name == "gaussian") {
        const auto v = parse_reals(args);
        require(v.size() == 2 && v[1] > 0, ErrorKind::invalid_input, "normal(mean,sd) needs sd > 0");
        return StepLaw::gaussian(v[0], v[1]);
    }
    if (name == "discrete") {
        DiscreteLaw d;
        for (const auto& atom : split(args, ';')) {
            const auto vp = parse_reals(atom, ':');
            require(vp.size() == 2, ErrorKind::invalid_input, "discrete atoms are value:prob");
            d.values.push_back(vp[0]);
            d.probs.push_back(vp[1]);
        }
        try {
            return StepLaw(d);
        } catch (const Error& e) {
            throw Error(ErrorKind::invalid_input, e.what());
        }
    }
    throw Error(ErrorKind::invalid_input, "unknown step law '" + text + "'");
}

// ---------------------------------------------------------------------------

enum class Estimator { grid, smc, direct, kingman };

inline const char* to_string(Estimator e) {
    switch (e) {
        case Estimator::grid: return "grid";
        case Estimator::smc: return "smc";
        case Estimator::direct: return "direct";
        case Estimator::kingman: return "kingman";
    }
    return "?";
}

/// Optional pass/fail gate on the aggregate exponent.
struct Gate {
    enum class Kind { none, contains, above, below } kind = Kind::none;
    double value = 0.0;

    bool evaluate(const QuenchedAggregate& a) const {
        switch (kind) {
            case Kind::none: return true;
            case Kind::contains: return a.ci_lo <= value && value <= a.ci_hi;
            case Kind::above: return a.ci_lo > value;
            case Kind::below: return a.ci_hi < value;
        }
        return true;
    }
};

struct ExperimentConfig {
    ProcessSpec process;
    double x0 = 1.0;
    WallSpec wall;
    std::vector<double> horizons = dyadic_horizons(4, 12);
    Estimator estimator = Estimator::grid;
    double dx = 0.2;
    bool bridge = true;
    bool wall_subgrid = true;
    std::size_t particles = 10000;
    std::size_t samples = 100000;
    std::size_t replicates = 1;
    EndWindow window;
    std::optional<FitScale> fit_scale;  // unset: log-time, or time for OU
    double kingman_a = 0.5;             // block start / end interval (a, inf)
    std::size_t kingman_stride = 5;     // q_{0,n} read every stride excursions
    std::size_t n_walls = 40;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::string out_dir;
    Gate gate;

    FitScale effective_scale() const {
        if (fit_scale) return *fit_scale;
        return process.kind == ProcessKind::ou ? FitScale::time : FitScale::log_time;
    }

    double horizon_max() const { return horizons.back(); }

    GridConfig grid_config() const {
        GridConfig g;
        g.process = process;
        g.dx = dx;
        g.bridge = bridge;
        g.wall_subgrid = wall_subgrid;
        return g;
    }

    void validate() const {
        require(!horizons.empty(), ErrorKind::invalid_input, "horizons must not be empty");
        for (std::size_t i = 0; i < horizons.size(); ++i) {
            require(horizons[i] > 0, ErrorKind::invalid_input, "horizons must be positive");
            if (i) require(horizons[i] > horizons[i - 1], ErrorKind::invalid_input, "horizons must increase");
        }
        require(dx >= 0 && std::isfinite(dx), ErrorKind::invalid_input, "dx must be >= 0");
        require(particles >= 1 && samples >= 1 && replicates >= 1 && n_walls >= 1 && jobs >= 1,
                ErrorKind::invalid_input, "budgets must be positive");
        require(std::isfinite(x0), ErrorKind::invalid_input, "x0 must be finite");
        require(kingman_stride >= 1, ErrorKind::invalid_input, "kingman stride must be >= 1");
        if (estimator == Estimator::kingman)
            require(process.kind == ProcessKind::ou && wall.kind == WallKind::scaled_ou, ErrorKind::invalid_input,
                    "the kingman estimator needs an OU walker and an OU wall");
        if (process.kind == ProcessKind::rw_env)
            require(wall.kind == WallKind::environment, ErrorKind::invalid_input, "rw-env needs an environment wall");
        if (process.kind == ProcessKind::ou) require(process.ou.mu > 0 && process.ou.sigma > 0, ErrorKind::invalid_input,
                                                     "OU walker needs mu, sigma > 0");
        try {
            wall.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::invalid_input, e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// serialization

inline std::string format_window(const EndWindow& w) {
    if (!w.enabled) return "none";
    const char* name = w.scale == EndWindow::Scale::sqrt_horizon ? "sqrt" : "constant";
    return std::string(name) + "(" + fmt_real(w.a) + "," + fmt_real(w.b) + ")";
}

inline EndWindow parse_window(const std::string& text) {
    const auto [name, args] = split_call(text);
    if (name == "none") return EndWindow::none();
    const auto v = parse_reals(args);
    require(v.size() == 2, ErrorKind::invalid_input, "window needs (a,b)");
    if (name == "sqrt") return EndWindow::sqrt_scaled(v[0], v[1]);
    if (name == "constant") return EndWindow::constant_scaled(v[0], v[1]);
    throw Error(ErrorKind::invalid_input, "unknown window '" + text + "'");
}

inline std::vector<double> parse_horizons(const std::string& text) {
    const auto [name, args] = split_call(text);
    if (name == "dyadic") {
        const auto v = parse_reals(args);
        require(v.size() == 2 && v[0] >= 0 && v[1] >= v[0] && v[1] <= 40, ErrorKind::invalid_input,
                "dyadic(lo,hi) needs 0 <= lo <= hi <= 40");
        return dyadic_horizons(static_cast<int>(v[0]), static_cast<int>(v[1]));
    }
    if (name == "list") return parse_reals(args);
    return parse_reals(text);
}

inline const char* env_family_key(EnvFamily f) { return to_string(f); }

inline EnvFamily parse_env_family(const std::string& s) {
    for (auto f : {EnvFamily::gaussian_random_mean, EnvFamily::two_point_random_bias,
                   EnvFamily::shifted_bernoulli_mixture})
        if (s == to_string(f)) return f;
    throw Error(ErrorKind::invalid_input, "unknown environment family '" + s + "'");
}

inline WallKind parse_wall_kind(const std::string& s) {
    if (s == "brownian") return WallKind::scaled_brownian;
    if (s == "ou") return WallKind::scaled_ou;
    for (auto k : {WallKind::zero, WallKind::scaled_brownian, WallKind::scaled_ou, WallKind::random_walk,
                   WallKind::iid, WallKind::environment})
        if (s == to_string(k)) return k;
    throw Error(ErrorKind::invalid_input, "unknown wall kind '" + s + "'");
}

/// Key = value lines for a wall spec (prefix "wall."); shared by configs and wall files.
inline std::vector<std::pair<std::string, std::string>> wall_fields(const WallSpec& w) {
    std::vector<std::pair<std::string, std::string>> f{
        {"wall", to_string(w.kind)},         {"wall.beta", fmt_real(w.beta)},
        {"wall.dt", fmt_real(w.dt)},         {"wall.mu", fmt_real(w.ou.mu)},
        {"wall.sigma", fmt_real(w.ou.sigma)}, {"wall.law", format_law(w.law)},
        {"env.family", env_family_key(w.env.family)},
        {"env.step_sd", fmt_real(w.env.step_sd)},
        {"env.mean_sd", fmt_real(w.env.mean_sd)},
        {"env.step", fmt_real(w.env.step)},
        {"env.bias", join_reals(w.env.bias_values)},
        {"env.q", fmt_real(w.env.bernoulli_q)},
        {"env.shift", fmt_real(w.env.shift)},
    };
    if (w.perturbation) {
        const auto& p = *w.perturbation;
        if (p.is_table())
            f.push_back({"perturbation", "table(" + join_reals(p.table_times, ' ') + ";" +
                                             join_reals(p.table_values, ' ') + ")"});
        else
            f.push_back({"perturbation", "power(" + fmt_real(p.amplitude) + "," + fmt_real(p.eps) + ")"});
    } else {
        f.push_back({"perturbation", "none"});
    }
    f.push_back({"offset", w.offset ? "log(" + fmt_real(w.offset->level) + "," + fmt_real(w.offset->growth) + ")"
                                    : "none"});
    return f;
}

/// Applies one wall-related key; returns false if the key is not a wall key.
inline bool apply_wall_field(WallSpec& w, const std::string& key, const std::string& val) {
    if (key == "wall") {
        w.kind = parse_wall_kind(val);
        if (w.integer_time()) w.dt = 1.0;
    } else if (key == "wall.beta") {
        w.beta = parse_real(val, key);
    } else if (key == "wall.dt") {
        w.dt = parse_real(val, key);
    } else if (key == "wall.mu") {
        w.ou.mu = parse_real(val, key);
    } else if (key == "wall.sigma") {
        w.ou.sigma = parse_real(val, key);
    } else if (key == "wall.law") {
        w.law = parse_law(val);
    } else if (key == "env.family") {
        w.env.family = parse_env_family(val);
    } else if (key == "env.step_sd") {
        w.env.step_sd = parse_real(val, key);
    } else if (key == "env.mean_sd") {
        w.env.mean_sd = parse_real(val, key);
    } else if (key == "env.step") {
        w.env.step = parse_real(val, key);
    } else if (key == "env.bias") {
        w.env.bias_values = parse_reals(val);
    } else if (key == "env.q") {
        w.env.bernoulli_q = parse_real(val, key);
    } else if (key == "env.shift") {
        w.env.shift = parse_real(val, key);
    } else if (key == "perturbation") {
        const auto [name, args] = split_call(val);
        if (name == "none") {
            w.perturbation.reset();
        } else if (name == "power") {
            const auto v = parse_reals(args);
            require(v.size() == 2, ErrorKind::invalid_input, "power(A,eps)");
            w.perturbation = Perturbation{v[0], v[1], {}, {}};
        } else if (name == "table") {
            const auto parts = split(args, ';');
            require(parts.size() == 2, ErrorKind::invalid_input, "table(t t ...;f f ...)");
            w.perturbation = Perturbation{0, 0.1, parse_reals(parts[0], ' '), parse_reals(parts[1], ' ')};
        } else {
            throw Error(ErrorKind::invalid_input, "unknown perturbation '" + val + "'");
        }
    } else if (key == "offset") {
        const auto [name, args] = split_call(val);
        if (name == "none") {
            w.offset.reset();
        } else {
            require(name == "log", ErrorKind::invalid_input, "offset is none or log(level,growth)");
            const auto v = parse_reals(args);
            require(v.size() == 2, ErrorKind::invalid_input, "log(level,growth)");
            w.offset = Offset{v[0], v[1]};
        }
    } else {
        return false;
    }
    return true;
}

inline std::string format_gate(const Gate& g) {
    switch (g.kind) {
        case Gate::Kind::none: return "none";
        case Gate::Kind::contains: return "contains(" + fmt_real(g.value) + ")";
        case Gate::Kind::above: return "above(" + fmt_real(g.value) + ")";
        case Gate::Kind::below: return "below(" + fmt_real(g.value) + ")";
    }
    return "none";
}

inline Gate parse_gate(const std::string& text) {
    const auto [name, args] = split_call(text);
    Gate g;
    if (name == "none") return g;
    g.value = parse_real(args, "gate value");
    if (name == "contains")
        g.kind = Gate::Kind::contains;
    else if (name == "above")
        g.kind = Gate::Kind::above;
    else if (name == "below")
        g.kind = Gate::Kind::below;
    else
        throw Error(ErrorKind::invalid_input, "unknown gate '" + text + "'");
    return g;
}

inline ProcessKind parse_process_kind(const std::string& s) {
    for (auto k : {ProcessKind::bm, ProcessKind::ou, ProcessKind::rw, ProcessKind::rw_env})
        if (s == to_string(k)) return k;
    throw Error(ErrorKind::invalid_input, "unknown process '" + s + "'");
}

inline Estimator parse_estimator(const std::string& s) {
    for (auto e : {Estimator::grid, Estimator::smc, Estimator::direct, Estimator::kingman})
        if (s == to_string(e)) return e;
    throw Error(ErrorKind::invalid_input, "unknown estimator '" + s + "'");
}

/// Canonical text; `with_runtime` adds the keys that do not affect results (jobs, out).
inline std::string serialize_config(const ExperimentConfig& c, bool with_runtime = true) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << "\n"; };
    kv("schema", config_schema);
    kv("process", to_string(c.process.kind));
    kv("process.mu", fmt_real(c.process.ou.mu));
    kv("process.sigma", fmt_real(c.process.ou.sigma));
    kv("process.step", format_law(c.process.step));
    kv("x0", fmt_real(c.x0));
    for (const auto& [k, v] : wall_fields(c.wall)) kv(k, v);
    kv("horizons", "list(" + join_reals(c.horizons) + ")");
    kv("estimator", to_string(c.estimator));
    kv("dx", fmt_real(c.dx));
    kv("bridge", c.bridge ? "true" : "false");
    kv("wall_subgrid", c.wall_subgrid ? "true" : "false");
    kv("particles", std::to_string(c.particles));
    kv("samples", std::to_string(c.samples));
    kv("replicates", std::to_string(c.replicates));
    kv("window", format_window(c.window));
    kv("fit", c.fit_scale ? to_string(*c.fit_scale) : "auto");
    kv("kingman.a", fmt_real(c.kingman_a));
    kv("kingman.stride", std::to_string(c.kingman_stride));
    kv("walls", std::to_string(c.n_walls));
    kv("seed", std::to_string(c.seed));
    kv("gate", format_gate(c.gate));
    if (with_runtime) {
        kv("jobs", std::to_string(c.jobs));
        if (!c.out_dir.empty()) kv("out", c.out_dir);
    }
    return os.str();
}

inline void apply_config_field(ExperimentConfig& c, const std::string& key, const std::string& val) {
    if (key == "schema") {
        require(val == config_schema, ErrorKind::invalid_input, "unsupported config schema '" + val + "'");
    } else if (key == "process") {
        c.process.kind = parse_process_kind(val);
    } else if (key == "process.mu") {
        c.process.ou.mu = parse_real(val, key);
    } else if (key == "process.sigma") {
        c.process.ou.sigma = parse_real(val, key);
    } else if (key == "process.step") {
        c.process.step = parse_law(val);
    } else if (key == "x0") {
        c.x0 = parse_real(val, key);
    } else if (apply_wall_field(c.wall, key, val)) {
    } else if (key == "horizons") {
        c.horizons = parse_horizons(val);
    } else if (key == "estimator") {
        c.estimator = parse_estimator(val);
    } else if (key == "dx") {
        c.dx = parse_real(val, key);
    } else if (key == "bridge") {
        c.bridge = parse_bool(val);
    } else if (key == "wall_subgrid") {
        c.wall_subgrid = parse_bool(val);
    } else if (key == "particles") {
        c.particles = parse_u64(val, key);
    } else if (key == "samples") {
        c.samples = parse_u64(val, key);
    } else if (key == "replicates") {
        c.replicates = parse_u64(val, key);
    } else if (key == "window") {
        c.window = parse_window(val);
    } else if (key == "fit") {
        if (val == "auto")
            c.fit_scale.reset();
        else if (val == "log-time")
            c.fit_scale = FitScale::log_time;
        else if (val == "time")
            c.fit_scale = FitScale::time;
        else
            throw Error(ErrorKind::invalid_input, "fit is auto, log-time or time");
    } else if (key == "kingman.a") {
        c.kingman_a = parse_real(val, key);
    } else if (key == "kingman.stride") {
        c.kingman_stride = parse_u64(val, key);
    } else if (key == "walls") {
        c.n_walls = parse_u64(val, key);
    } else if (key == "seed") {
        c.seed = parse_u64(val, key);
    } else if (key == "jobs") {
        c.jobs = parse_u64(val, key);
    } else if (key == "out") {
        c.out_dir = val;
    } else if (key == "gate") {
        c.gate = parse_gate(val);
    } else {
        throw Error(ErrorKind::invalid_input, "unknown config key '" + key + "'");
    }
}

/// Parses key = value lines ('#' starts a comment). Keys apply in order, so later lines win.
inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::invalid_input,
                "config line " + std::to_string(lineno) + " is not key = value");
        apply_config_field(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

/// FNV-1a over the canonical result-affecting text.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : serialize_config(c, false)) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace persist
