#pragma once

// Experiment orchestration: one task per wall replica, each owning the
// stream (seed, wall id); results land in wall-id order so the merge does not
// depend on scheduling or worker count.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "persist/config.hpp"
#include "persist/excursions.hpp"
#include "persist/exponent.hpp"
#include "persist/grid_engine.hpp"
#include "persist/particles.hpp"

namespace persist {

inline constexpr const char* record_schema = "persist-run/1";

struct WallResult {
    std::uint64_t wall_id = 0;
    SurvivalCurve curve;
    ExponentFit fit;
    std::size_t excursions = 0;    // kingman only
    double mean_duration = 0.0;    // kingman only: empirical E r_1
    double gamma_tilde = 0.0;      // kingman only: per-excursion rate
};

struct RunRecord {
    ExperimentConfig config;
    std::uint64_t hash = 0;
    std::vector<WallResult> walls;
    std::optional<QuenchedAggregate> aggregate;
    std::size_t died = 0;
    bool gate_pass = true;
    double seconds = 0.0;
};

/// Stream of the estimator replicate r on wall w: (seed, w).child(r + 1). The wall itself uses
/// (seed, w) directly.
inline RngStream wall_stream(const ExperimentConfig& c, std::uint64_t w) { return {c.seed, w}; }
inline RngStream estimator_stream(const ExperimentConfig& c, std::uint64_t w, std::uint64_t r = 0) {
    return wall_stream(c, w).child(r + 1);
}

inline double wall_horizon(const ExperimentConfig& c) {
    // integer-time walls and walkers need whole steps; other walls cover the largest horizon
    return c.horizon_max();
}

inline WallResult run_wall(const ExperimentConfig& c, std::uint64_t w) {
    WallResult res;
    res.wall_id = w;
    const auto wall = realize_wall(c.wall, wall_horizon(c), wall_stream(c, w));
    const auto scale = c.effective_scale();
    switch (c.estimator) {
        case Estimator::grid:
            res.curve = grid_survival(wall, c.x0, c.horizons, c.window, c.grid_config());
            break;
        case Estimator::smc: {
            SmcConfig s;
            s.process = c.process;
            s.particles = c.particles;
            s.bridge = c.bridge;
            s.wall_subgrid = c.wall_subgrid;
            res.curve = c.replicates >= 2
                            ? smc_survival_replicated(wall, c.x0, c.horizons, c.window, s, estimator_stream(c, w),
                                                      c.replicates)
                            : smc_survival(wall, c.x0, c.horizons, c.window, s, estimator_stream(c, w));
            break;
        }
        case Estimator::direct: {
            DirectMcConfig d;
            d.process = c.process;
            d.samples = c.samples;
            d.bridge = c.bridge;
            d.wall_subgrid = c.wall_subgrid;
            res.curve = direct_mc_survival(wall, c.x0, c.horizons, c.window, d, estimator_stream(c, w));
            break;
        }
        case Estimator::kingman: {
            const auto d = decompose(wall.underlying);
            std::vector<std::size_t> ns;
            for (std::size_t n = c.kingman_stride; n <= d.count(); n += c.kingman_stride) ns.push_back(n);
            require(ns.size() >= 4, ErrorKind::experiment_failed, "too few excursions for a Kingman trend");
            BlockInterval I;
            I.a = c.kingman_a;
            const auto k = kingman_trend(wall, d, c.grid_config(), ns, I);
            for (std::size_t i = 0; i < k.n.size(); ++i) {
                SurvivalPoint p;
                p.horizon = k.rho[i];
                p.logp = k.q[i] == pos_inf ? neg_inf : -k.q[i];
                p.estimator = "kingman";
                p.died = k.q[i] == pos_inf;
                res.curve.add(p);
            }
            res.excursions = d.count();
            res.mean_duration = k.mean_duration;
            res.gamma_tilde = k.gamma_tilde;
            break;
        }
    }
    res.curve.wall_id = w;
    res.curve.seed = c.seed;
    res.fit = fit_exponent(res.curve, scale);
    return res;
}

inline RunRecord run_experiment(const ExperimentConfig& c) {
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config = c;
    rec.hash = config_hash(c);
    rec.walls.resize(c.n_walls);
    std::vector<std::exception_ptr> errors(c.n_walls);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t w; (w = next.fetch_add(1)) < c.n_walls;) {
            try {
                rec.walls[w] = run_wall(c, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        }
    };
    const std::size_t jobs = std::min(c.jobs, c.n_walls);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<ExponentFit> fits;
    std::vector<SurvivalCurve> curves;
    for (const auto& r : rec.walls) {
        fits.push_back(r.fit);
        curves.push_back(r.curve);
        if (r.fit.infeasible) ++rec.died;
    }
    if (rec.died == rec.walls.size()) {
        rec.gate_pass = false;
    } else {
        const double sys = mean_curve_systematic(curves, c.effective_scale());
        rec.aggregate = aggregate_quenched(fits, 1000, RngStream{c.seed, 0}.child(0xa99), sys);
        rec.gate_pass = c.gate.evaluate(*rec.aggregate);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------
// persistence

inline nlohmann::json fit_json(const ExponentFit& f) {
    nlohmann::json j{{"gamma_hat", f.infeasible ? nlohmann::json("inf") : nlohmann::json(f.gamma_hat)},
                     {"stderr", f.stderr_},
                     {"scale", to_string(f.scale)},
                     {"n_min", f.n_min},
                     {"n_max", f.n_max},
                     {"r2", f.r2},
                     {"points", f.points},
                     {"infeasible", f.infeasible}};
    if (!f.note.empty()) j["note"] = f.note;
    return j;
}

inline nlohmann::json aggregate_json(const QuenchedAggregate& a) {
    return {{"mean", a.mean}, {"ci_lo", a.ci_lo}, {"ci_hi", a.ci_hi}, {"boot_lo", a.boot_lo}, {"boot_hi", a.boot_hi},
            {"systematic", a.systematic}, {"sd", a.sd},
            {"n_walls", a.n_walls}, {"excluded", a.excluded}};
}

inline std::string hex64(std::uint64_t v) {
    char b[20];
    std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
    return b;
}

/// Line-delimited JSON: a header record (schema, config text, hash, timing), one "fit" record per
/// wall, then the "aggregate" record.
inline std::vector<nlohmann::json> record_lines(const RunRecord& r) {
    std::vector<nlohmann::json> lines;
    lines.push_back({{"schema", record_schema},
                     {"type", "run"},
                     {"config_hash", hex64(r.hash)},
                     {"config", serialize_config(r.config, false)},
                     {"seed", r.config.seed},
                     {"walls", r.config.n_walls},
                     {"seconds", r.seconds}});
    for (const auto& w : r.walls) {
        nlohmann::json j{{"schema", record_schema}, {"type", "fit"}, {"wall_id", w.wall_id}, {"fit", fit_json(w.fit)}};
        if (r.config.estimator == Estimator::kingman) {
            j["excursions"] = w.excursions;
            j["mean_duration"] = w.mean_duration;
            j["gamma_tilde"] = w.gamma_tilde;
        }
        lines.push_back(j);
    }
    nlohmann::json agg{{"schema", record_schema}, {"type", "aggregate"}, {"died", r.died}, {"gate_pass", r.gate_pass},
                       {"gate", format_gate(r.config.gate)}};
    if (r.aggregate) agg["aggregate"] = aggregate_json(*r.aggregate);
    lines.push_back(agg);
    return lines;
}

/// Writes curves.csv, record.jsonl and config.txt under dir.
inline void write_run(const RunRecord& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream os(dir / "curves.csv");
        write_curve_csv_header(os);
        for (const auto& w : r.walls) write_curve_csv(os, w.curve);
    }
    {
        std::ofstream os(dir / "record.jsonl");
        for (const auto& j : record_lines(r)) os << j.dump() << "\n";
    }
    {
        std::ofstream os(dir / "config.txt");
        os << serialize_config(r.config, false);
    }
}

struct LoadedRecord {
    ExperimentConfig config;
    std::string config_hash;
    std::vector<nlohmann::json> fits;
    nlohmann::json aggregate;
};

inline LoadedRecord read_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot read record '" + path.string() + "'");
    LoadedRecord out;
    bool header = false;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::invalid_input, std::string("malformed record line: ") + e.what());
        }
        require(j.value("schema", "") == record_schema, ErrorKind::invalid_input, "unsupported record schema");
        const auto type = j.value("type", "");
        if (type == "run") {
            out.config = parse_config(j.at("config").get<std::string>());
            out.config_hash = j.at("config_hash").get<std::string>();
            header = true;
        } else if (type == "fit") {
            out.fits.push_back(j);
        } else if (type == "aggregate") {
            out.aggregate = j;
        }
    }
    require(header, ErrorKind::invalid_input, "record has no run header");
    return out;
}

/// Re-runs a stored record and compares every fit and the aggregate exactly.
inline bool replay_matches(const LoadedRecord& stored, const RunRecord& fresh) {
    const auto lines = record_lines(fresh);
    if (hex64(fresh.hash) != stored.config_hash) return false;
    if (stored.fits.size() != fresh.walls.size()) return false;
    for (std::size_t i = 0; i < stored.fits.size(); ++i)
        if (stored.fits[i].at("fit") != lines[i + 1].at("fit")) return false;
    return stored.aggregate == lines.back();
}

}  // namespace persist
