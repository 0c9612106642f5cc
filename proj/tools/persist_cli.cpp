// persist: command-line front end for the experiment harness.
//
// Exit codes: 0 pass, 1 gated failure, 2 invalid input.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "persist/config.hpp"
#include "persist/experiment.hpp"
#include "persist/spectral.hpp"
#include "persist/tilt.hpp"
#include "persist/validate.hpp"

namespace fs = std::filesystem;
using namespace persist;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_gated = 1;
constexpr int exit_invalid = 2;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> walls;
    std::optional<std::size_t> particles;
    std::optional<double> dx;
    std::optional<double> horizon_max;
    std::optional<double> beta;
    std::string window;
    std::string out;
    std::optional<std::size_t> jobs;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "experiment config (key = value)");
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--walls", o.walls, "number of quenched wall replicas");
    app->add_option("--particles", o.particles, "SMC particle count");
    app->add_option("--dx", o.dx, "grid spacing");
    app->add_option("--horizon-max", o.horizon_max, "largest horizon");
    app->add_option("--beta", o.beta, "wall scale beta");
    app->add_option("--window", o.window, "end window a,b");
    app->add_option("--out", o.out, "output directory (default $PERSIST_OUT_DIR or ./persist-out)");
    app->add_option("--jobs", o.jobs, "worker threads");
}

std::string out_dir(const CommonOptions& o, const std::string& fallback = {}) {
    if (!o.out.empty()) return o.out;
    if (!fallback.empty()) return fallback;
    if (const char* env = std::getenv("PERSIST_OUT_DIR"); env && *env) return env;
    return "persist-out";
}

ExperimentConfig build_config(const CommonOptions& o) {
    ExperimentConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.walls) c.n_walls = *o.walls;
    if (o.particles) c.particles = *o.particles;
    if (o.dx) c.dx = *o.dx;
    if (o.beta) c.wall.beta = *o.beta;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.horizon_max) {
        const double n = *o.horizon_max;
        require(n > 0, ErrorKind::invalid_input, "--horizon-max must be positive");
        std::vector<double> h;
        for (double v : c.horizons)
            if (v < n) h.push_back(v);
        h.push_back(n);
        c.horizons = h;
    }
    if (!o.window.empty()) {
        const auto v = parse_reals(o.window);
        require(v.size() == 2, ErrorKind::invalid_input, "--window expects a,b");
        c.window = c.process.kind == ProcessKind::ou ? EndWindow::constant_scaled(v[0], v[1])
                                                     : EndWindow::sqrt_scaled(v[0], v[1]);
    }
    c.out_dir = out_dir(o, c.out_dir);
    return c;
}

void print_aggregate(const RunRecord& r) {
    std::cout << "walls " << r.walls.size() << ", infeasible " << r.died << ", " << std::fixed
              << std::setprecision(1) << r.seconds << " s\n";
    if (r.aggregate) {
        const auto& a = *r.aggregate;
        std::cout << std::setprecision(5) << "gamma_hat " << a.mean << "  95% CI [" << a.ci_lo << ", " << a.ci_hi
                  << "]  (bootstrap [" << a.boot_lo << ", " << a.boot_hi << "], systematic " << a.systematic << ")\n";
    }
    if (r.config.gate.kind != Gate::Kind::none)
        std::cout << "gate " << format_gate(r.config.gate) << ": " << (r.gate_pass ? "pass" : "FAIL") << "\n";
}

int cmd_simulate(const CommonOptions& o) {
    const auto c = build_config(o);
    const auto rec = run_experiment(c);
    write_run(rec, c.out_dir);
    print_aggregate(rec);
    std::cout << "wrote " << (fs::path(c.out_dir) / "record.jsonl").string() << "\n";
    if (!rec.aggregate) {
        std::cerr << "experiment-failed: every wall died\n";
        return exit_gated;
    }
    return rec.gate_pass ? exit_pass : exit_gated;
}

/// Reads curves.csv (horizon,logp,stderr,estimator,wall_id,seed) grouped by wall id.
std::vector<SurvivalCurve> read_curves(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot read curves '" + path + "'");
    std::string line;
    std::getline(in, line);
    require(trim(line) == "horizon,logp,stderr,estimator,wall_id,seed", ErrorKind::invalid_input,
            "unexpected curve CSV header");
    std::map<std::uint64_t, SurvivalCurve> by_wall;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto f = split(line, ',');
        require(f.size() == 6, ErrorKind::invalid_input, "curve rows need 6 fields");
        SurvivalPoint p;
        p.horizon = parse_real(f[0], "horizon");
        p.logp = parse_real(f[1], "logp");
        p.stderr_ = parse_real(f[2], "stderr");
        p.estimator = f[3];
        auto& c = by_wall[parse_u64(f[4], "wall_id")];
        c.wall_id = parse_u64(f[4], "wall_id");
        c.seed = parse_u64(f[5], "seed");
        c.add(p);
    }
    std::vector<SurvivalCurve> out;
    for (auto& [id, c] : by_wall) out.push_back(std::move(c));
    require(!out.empty(), ErrorKind::invalid_input, "no curves in '" + path + "'");
    return out;
}

int cmd_exponent(const CommonOptions& o, const std::string& curves_path, const std::string& scale_name,
                 const std::string& fit_window) {
    const std::string path = curves_path.empty() ? (fs::path(out_dir(o)) / "curves.csv").string() : curves_path;
    const auto curves = read_curves(path);
    FitScale scale = FitScale::log_time;
    if (scale_name == "time")
        scale = FitScale::time;
    else
        require(scale_name == "log-time", ErrorKind::invalid_input, "--scale is log-time or time");
    FitWindow win;
    if (!fit_window.empty()) {
        const auto v = parse_reals(fit_window);
        require(v.size() == 2 && v[0] < v[1], ErrorKind::invalid_input, "--fit-window expects lo,hi");
        win = FitWindow::between(v[0], v[1]);
    }
    std::vector<ExponentFit> fits;
    const fs::path dir = out_dir(o, fs::path(path).parent_path().string());
    fs::create_directories(dir);
    std::ofstream os(dir / "fits.jsonl");
    for (const auto& c : curves) {
        fits.push_back(fit_exponent(c, scale, win));
        nlohmann::json j{{"schema", record_schema}, {"type", "fit"}, {"wall_id", c.wall_id}, {"fit", fit_json(fits.back())}};
        j["fit"]["window_robust"] = window_robust(c, fits.back());
        os << j.dump() << "\n";
        std::cout << "wall " << c.wall_id << ": "
                  << (fits.back().infeasible ? std::string("+inf (infeasible)") : detail::fmt(fits.back().gamma_hat, 5))
                  << "\n";
    }
    const auto agg = aggregate_quenched(fits, 1000, RngStream{o.seed.value_or(1), 0}.child(0xa99),
                                        mean_curve_systematic(curves, scale, win));
    os << nlohmann::json{{"schema", record_schema}, {"type", "aggregate"}, {"aggregate", aggregate_json(agg)}}.dump()
       << "\n";
    for (const auto& sp : normalized_spread(curves, scale))
        std::cout << "spread N=" << sp.horizon << ": sd(log p / scale) = " << detail::fmt(sp.sd, 5) << "\n";
    std::cout << "gamma_hat " << detail::fmt(agg.mean, 5) << "  95% CI [" << detail::fmt(agg.ci_lo, 5) << ", "
              << detail::fmt(agg.ci_hi, 5) << "]  walls " << agg.n_walls << " (excluded " << agg.excluded << ")\n";
    return exit_pass;
}

int cmd_spectral(const CommonOptions& o, double mu1, double mu2, const std::string& betas, double L, double h,
                 bool sensitivity, double expect_tol) {
    std::vector<double> bs = betas.empty() ? std::vector<double>{o.beta.value_or(1.0)} : parse_reals(betas);
    const fs::path dir = out_dir(o);
    fs::create_directories(dir);
    std::ofstream csv(dir / "spectral.csv");
    write_spectral_csv_header(csv);
    write_spectral_csv_header(std::cout);
    bool ok = true;
    for (double b : bs) {
        SpectralProblem p;
        p.mu1 = mu1;
        p.mu2 = mu2;
        p.beta = b;
        p.half_width = L;
        p.h = h;
        const auto r = principal_eigenvalue(p);
        write_spectral_csv(csv, p, r);
        write_spectral_csv(std::cout, p, r);
        if (sensitivity) std::cout << "# truncation |lambda(L) - lambda(1.25 L)| = " << truncation_sensitivity(p) << "\n";
        if (expect_tol > 0 && mu1 == mu2) ok = ok && std::abs(r.lambda1 - mu1) <= expect_tol * mu1;
    }
    return ok ? exit_pass : exit_gated;
}

int cmd_tilt(const CommonOptions& o, const std::string& law_text, const std::string& thetas_text, double c1,
             std::size_t growth_n, double growth_c, std::size_t samples, const std::string& schedule) {
    if (growth_n > 0) {
        const auto cfg = build_config(o);
        const EnvModel model = cfg.wall.kind == WallKind::environment ? cfg.wall.env : EnvModel{};
        const auto env = sample_env(model, growth_n, RngStream{cfg.seed, 0});
        TiltSchedule s = TiltSchedule::decaying;
        if (schedule == "constant")
            s = TiltSchedule::constant;
        else if (schedule == "none")
            s = TiltSchedule::none;
        else
            require(schedule == "decaying", ErrorKind::invalid_input, "--schedule is decaying, constant or none");
        const auto est = fast_growth_estimate(env.laws, growth_n, growth_c, samples, RngStream{cfg.seed, 1}, s);
        std::cout << "level " << est.level << "  log p " << est.logp << "  rel stderr " << est.stderr_ << "  ess "
                  << est.ess << (est.unreliable ? "  UNRELIABLE" : "") << "\n";
        return est.unreliable ? exit_gated : exit_pass;
    }
    const auto law = parse_law(law_text);
    std::vector<double> thetas;
    if (thetas_text.empty())
        for (int i = 1; i <= 20; ++i) thetas.push_back(c1 / 2 * i / 20.0);
    else
        thetas = parse_reals(thetas_text);
    const auto rep = tilted_mean_bracket_check(law, thetas, c1);
    std::cout << "law " << format_law(law) << "  E X^2 = " << rep.second_moment << "  K = " << rep.K
              << "  theta_max = " << rep.theta_max << "\n";
    std::cout << "theta,m,deviation,bound,ok\n";
    for (const auto& r : rep.rows)
        std::cout << r.theta << "," << r.m << "," << r.deviation << "," << r.bound << "," << (r.ok ? 1 : 0) << "\n";
    std::cout << "envelope c in [" << rep.c_lo << ", " << rep.c_hi << "]: " << (rep.pass ? "pass" : "FAIL") << "\n";
    return rep.pass ? exit_pass : exit_gated;
}

int cmd_validate(const CommonOptions& o, const std::string& level) {
    require(level == "quick" || level == "full", ErrorKind::invalid_input, "--level is quick or full");
    Validator v(o.seed.value_or(20240601));
    if (o.walls) v.walls = *o.walls;
    int failed = 0;
    v.run(level == "full" ? ValidationLevel::full : ValidationLevel::quick, [&](const CriterionResult& r) {
        std::cout << format_result(r) << std::endl;
        failed += !r.pass;
    });
    std::cout << (failed ? std::to_string(failed) + " failed" : std::string("all passed")) << "\n";
    return failed ? exit_gated : exit_pass;
}

int cmd_replay(const CommonOptions& o, const std::string& record_path) {
    const std::string path = record_path.empty() ? (fs::path(out_dir(o)) / "record.jsonl").string() : record_path;
    const auto stored = read_record(path);
    auto c = stored.config;
    if (o.jobs) c.jobs = *o.jobs;
    const auto fresh = run_experiment(c);
    const bool same = replay_matches(stored, fresh);
    if (!o.out.empty()) write_run(fresh, o.out);
    print_aggregate(fresh);
    std::cout << "replay " << (same ? "identical" : "DIFFERS") << " (config " << stored.config_hash << ")\n";
    return same ? exit_pass : exit_gated;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"persist: quenched persistence exponents above random walls"};
    app.require_subcommand(1);
    CommonOptions o;

    auto* sim = app.add_subcommand("simulate", "run one experiment config");
    add_common(sim, o);

    auto* exp = app.add_subcommand("exponent", "fit and aggregate stored survival curves");
    add_common(exp, o);
    std::string curves, scale = "log-time", fit_window;
    exp->add_option("--curves", curves, "curves.csv (default: <out>/curves.csv)");
    exp->add_option("--scale", scale, "log-time or time");
    exp->add_option("--fit-window", fit_window, "horizon range lo,hi (default: drop the lower third)");

    auto* spec = app.add_subcommand("spectral", "principal Dirichlet eigenvalue sweep");
    add_common(spec, o);
    double mu1 = 1, mu2 = 1, L = 8, h = 0.05, expect = 0;
    std::string betas;
    bool sens = false;
    spec->add_option("--mu1", mu1);
    spec->add_option("--mu2", mu2);
    spec->add_option("--betas", betas, "comma-separated beta list (overrides --beta)");
    spec->add_option("--half-width", L, "box half-width L");
    spec->add_option("--mesh", h, "mesh spacing h");
    spec->add_flag("--sensitivity", sens, "also report |lambda(L) - lambda(1.25 L)|");
    spec->add_option("--expect-mu", expect, "gate: relative tolerance for lambda1 = mu when mu1 = mu2");

    auto* tl = app.add_subcommand("tilt", "tilted-mean bracket or tilted fast-growth estimate");
    add_common(tl, o);
    std::string law = "rademacher", thetas, schedule = "decaying";
    double c1 = 1.0, growth_c = 1.0;
    std::size_t growth_n = 0, samples = 100000;
    tl->add_option("--law", law, "normal(m,sd) | rademacher | discrete(v:p;...)");
    tl->add_option("--thetas", thetas, "comma-separated theta grid");
    tl->add_option("--c1", c1, "exponential-moment constant; theta_max = c1/2");
    tl->add_option("--growth-n", growth_n, "run the fast-growth estimate at this N instead");
    tl->add_option("--growth-c", growth_c, "level constant c");
    tl->add_option("--samples", samples, "importance samples");
    tl->add_option("--schedule", schedule, "decaying | constant | none");

    auto* val = app.add_subcommand("validate", "run the property suite");
    add_common(val, o);
    std::string level = "quick";
    val->add_option("--level", level, "quick or full");

    auto* rep = app.add_subcommand("replay", "re-run a stored record and compare");
    add_common(rep, o);
    std::string record;
    rep->add_option("--record", record, "record.jsonl (default: <out>/record.jsonl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_pass : exit_invalid;
    }

    try {
        if (*sim) return cmd_simulate(o);
        if (*exp) return cmd_exponent(o, curves, scale, fit_window);
        if (*spec) return cmd_spectral(o, mu1, mu2, betas, L, h, sens, expect);
        if (*tl) return cmd_tilt(o, law, thetas, c1, growth_n, growth_c, samples, schedule);
        if (*val) return cmd_validate(o, level);
        if (*rep) return cmd_replay(o, record);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::experiment_failed:
            case ErrorKind::no_convergence: return exit_gated;
            default: return exit_invalid;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid;
    }
    return exit_invalid;
}
