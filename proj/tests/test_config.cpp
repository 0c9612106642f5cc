#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "persist/experiment.hpp"

using namespace persist;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
    return parse_config(
        "process = bm\n"
        "wall = brownian\n"
        "wall.beta = 1\n"
        "wall.dt = 1\n"
        "horizons = dyadic(3,8)\n"
        "dx = 0.25\n"
        "walls = 4\n"
        "seed = 17\n");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, Defaults) {
    const ExperimentConfig c;
    EXPECT_EQ(c.process.kind, ProcessKind::bm);
    EXPECT_EQ(c.horizons, dyadic_horizons(4, 12));
    EXPECT_EQ(c.n_walls, 40u);
}

TEST(Config, RoundTrip) {
    auto c = small_config();
    c.wall.perturbation = Perturbation::power(0.5, 0.2);
    c.window = EndWindow::sqrt_scaled(-0.5, 1.0);
    c.gate = parse_gate("above(0.5)");
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, HashIgnoresRuntimeKeys) {
    auto a = small_config(), b = small_config();
    b.jobs = 8;
    b.out_dir = "/tmp/elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 18;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, Laws) {
    EXPECT_EQ(parse_law("rademacher").as_discrete().values, (std::vector<double>{-1, 1}));
    const auto g = parse_law("normal(0.5, 2)");
    EXPECT_EQ(g.as_gaussian().mean, 0.5);
    EXPECT_EQ(g.as_gaussian().sd, 2.0);
    const auto d = parse_law("discrete(-1:0.75;3:0.25)");
    EXPECT_EQ(d.as_discrete().values, (std::vector<double>{-1, 3}));
    EXPECT_EQ(parse_law(format_law(d)).as_discrete().probs, d.as_discrete().probs);
    EXPECT_THROW(parse_law("cauchy(0,1)"), Error);
    EXPECT_THROW(parse_law("discrete(-1:0.5;1:0.6)"), Error);
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config("no_such_key = 1\n"), Error);
    EXPECT_THROW(parse_config("dx = fast\n"), Error);
    EXPECT_THROW(parse_config("horizons = dyadic(5)\n"), Error);
    EXPECT_THROW(parse_config("wall = lizard\n"), Error);
    auto c = small_config();
    c.dx = -1;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Config, CommentsAndWhitespace) {
    const auto c = parse_config("# comment\n  seed =  99  # trailing\n\nwalls=3\n");
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.n_walls, 3u);
}

TEST(Experiment, StreamRule) {
    const auto c = small_config();
    EXPECT_EQ(wall_stream(c, 3), (RngStream{17, 3}));
    EXPECT_EQ(estimator_stream(c, 3, 0), (RngStream{17, 3}.child(1)));
}

TEST(Experiment, DeterministicAcrossJobs) {
    auto c = small_config();
    const auto a = run_experiment(c);
    c.jobs = 3;
    const auto b = run_experiment(c);
    ASSERT_TRUE(a.aggregate && b.aggregate);
    for (std::size_t w = 0; w < a.walls.size(); ++w) EXPECT_EQ(a.walls[w].fit.gamma_hat, b.walls[w].fit.gamma_hat);
    EXPECT_EQ(a.aggregate->ci_lo, b.aggregate->ci_lo);
    EXPECT_EQ(a.aggregate->ci_hi, b.aggregate->ci_hi);
}

TEST(Experiment, SingleWallIsDegenerate) {
    auto c = small_config();
    c.n_walls = 1;
    const auto r = run_experiment(c);
    ASSERT_TRUE(r.aggregate);
    EXPECT_EQ(r.aggregate->mean, r.walls[0].fit.gamma_hat);
    EXPECT_EQ(r.aggregate->boot_lo, r.aggregate->boot_hi);
}

TEST(Experiment, SmcAndDirectEstimators) {
    auto c = small_config();
    c.n_walls = 2;
    c.horizons = dyadic_horizons(2, 6);
    const auto grid = run_experiment(c);
    c.estimator = Estimator::smc;
    c.particles = 2000;
    c.replicates = 10;
    const auto smc = run_experiment(c);
    c.estimator = Estimator::direct;
    c.samples = 20000;
    const auto direct = run_experiment(c);
    for (std::size_t w = 0; w < 2; ++w) {
        const double g = grid.walls[w].curve.entries.back().logp;
        const auto& s = smc.walls[w].curve.entries.back();
        const auto& d = direct.walls[w].curve.entries.back();
        EXPECT_NEAR(s.logp, g, 4 * s.stderr_ + 0.05);
        EXPECT_NEAR(d.logp, g, 4 * d.stderr_ + 0.05);
    }
}

TEST(Experiment, AllWallsInfeasible) {
    auto c = parse_config(
        "process = rw\nprocess.step = rademacher\nwall = iid\nwall.law = discrete(5:1)\n"
        "x0 = 0\nhorizons = list(4,8,16,32,64)\nwalls = 2\nseed = 4\n");
    c.estimator = Estimator::grid;
    c.dx = 0;
    const auto r = run_experiment(c);
    // the wall sits at 5 from n = 1 on; the walker can reach at most 1
    EXPECT_FALSE(r.aggregate.has_value());
    EXPECT_FALSE(r.gate_pass);
    EXPECT_TRUE(r.walls[0].fit.infeasible);
    EXPECT_EQ(r.died, 2u);
}

TEST(Experiment, WriteAndReplay) {
    const auto dir = fs::temp_directory_path() / "persist_test_replay";
    fs::remove_all(dir);
    const auto c = small_config();
    const auto r = run_experiment(c);
    write_run(r, dir);
    const auto first = slurp(dir / "curves.csv");
    const auto stored = read_record(dir / "record.jsonl");
    EXPECT_EQ(serialize_config(stored.config, false), serialize_config(c, false));
    const auto again = run_experiment(stored.config);
    EXPECT_TRUE(replay_matches(stored, again));
    write_run(again, dir);
    EXPECT_EQ(slurp(dir / "curves.csv"), first);

    auto other = c;
    other.seed = 99;
    EXPECT_FALSE(replay_matches(stored, run_experiment(other)));
    fs::remove_all(dir);
}
