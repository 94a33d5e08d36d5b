#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"

using namespace rrl;
using namespace rrl::harness;

namespace {

ResultRow sample_row(std::string env, std::string method, double eps, std::uint64_t seed, double gap) {
    ResultRow r;
    r.env = std::move(env);
    r.method = std::move(method);
    r.challenge_eps = eps;
    r.seed = seed;
    r.expected_risk = 10.0 + gap;
    r.empirical_risk = 10.0;
    r.gap = gap;
    r.extrinsic_sum = 0.125 * gap;
    r.intrinsic_sum = 3.5;
    r.total_bound = 1e6;
    r.final_mean_return = -13.0 - static_cast<double>(seed);
    r.decomposition_rhs = gap + 1.0;
    r.total_bound_range = 2e5;
    r.first_mean_return = -80.25;
    return r;
}

ExperimentSpec quick_spec(std::string env, Method method, double eps) {
    ExperimentSpec spec;
    spec.environment = std::move(env);
    spec.method = method;
    spec.train_challenge_eps = eps;
    spec.seeds = {1, 2};
    spec.rademacher_draws = 10;
    spec.train.episodes = 20;
    spec.train.warmup_steps = 100;
    spec.train.batch_size = 8;
    spec.train.hidden_dim = 8;
    spec.train.target_update_period = 20;
    spec.train.eps_decay_episodes = 15;
    spec.train.snapshot_every = 10;
    return spec;
}

}  // namespace

TEST(EmdpFile, RoundTripIsExact) {
    for (const auto& m : {build_cliffwalking(), build_taxi(), make_absorbing(action_randomize(build_taxi(), 0.3)),
                          oracle::random_emdp(7, 3, 9, 44, 3, true)}) {
        std::stringstream ss;
        io::write_emdp(ss, m);
        EXPECT_EQ(io::read_emdp(ss), m);
    }
}

TEST(EmdpFile, CommentsAndErrors) {
    const std::string text =
        "# two states\nEMDP v1 2 1 3\nMETRIC_FAMILY discrete\nINIT 0 1\n"
        "TRANS 0 0 1 1 -1 0\n\nTRANS 1 0 1 1 0 1\nMETRIC 0 1 2.5\n";
    std::stringstream ok(text);
    const auto m = io::read_emdp(ok);
    EXPECT_EQ(m.num_states, 2u);
    EXPECT_EQ(m.horizon, 3u);
    EXPECT_EQ(m.metric(0, 1), 2.5);
    EXPECT_TRUE(m.row(1, 0).front().terminal);
    std::stringstream bad_header("EMDP v2 2 1 3\n");
    EXPECT_THROW(io::read_emdp(bad_header), io::FormatError);
    std::stringstream bad_index("EMDP v1 2 1 3\nMETRIC_FAMILY discrete\nINIT 0 1\nTRANS 0 0 1 5 0 0\nTRANS 1 0 1 1 0 0\n");
    EXPECT_THROW(io::read_emdp(bad_index), std::exception);
}

TEST(BinaryFiles, QTensorAndPolicyRoundTrip) {
    CounterRng rng(3);
    QTensor q(4, 5, 3);
    for (double& x : q.data()) x = rng.uniform() * 100 - 50;
    std::stringstream ss;
    io::write_qtensor(ss, q);
    const auto back = io::read_qtensor(ss);
    EXPECT_TRUE(std::ranges::equal(back.data(), q.data()));
    for (bool stationary : {false, true}) {
        const auto pi = oracle::random_policy(4, 5, 3, rng, stationary);
        std::stringstream ps;
        io::write_policy(ps, pi);
        EXPECT_EQ(io::read_policy(ps), pi);
    }
    std::stringstream cut;
    io::write_qtensor(cut, q);
    std::stringstream half(cut.str().substr(0, cut.str().size() / 2));
    try {
        io::read_qtensor(half);
        ADD_FAILURE();
    } catch (const io::FormatError& e) {
        EXPECT_STREQ(e.what(), "unexpected end of Q tensor");
    }
}

TEST(VisitedCsv, RoundTripAndValidation) {
    VisitedStates v(4);
    v.add_episode(std::vector<StateId>{1, 2, 3, 48});
    v.add_episode(std::vector<StateId>{0, 0, 48, 48});
    std::stringstream ss;
    io::write_visited_csv(ss, v);
    EXPECT_EQ(ss.str().substr(0, 22), "episode,h,state\n1,1,1\n");
    EXPECT_EQ(io::read_visited_csv(ss), v);
    std::stringstream gap("episode,h,state\n1,1,0\n1,3,0\n");
    EXPECT_THROW(io::read_visited_csv(gap), io::FormatError);
    std::stringstream ragged("episode,h,state\n1,1,0\n1,2,0\n2,1,0\n");
    EXPECT_THROW(io::read_visited_csv(ragged), ShapeError);
}

TEST(ResultsCsv, RoundTrip) {
    std::vector<ResultRow> rows;
    for (std::uint64_t s = 1; s <= 5; ++s) rows.push_back(sample_row("taxi", "l2", 0.25, s, 0.5 * static_cast<double>(s)));
    rows.push_back(sample_row("cliffwalking", "vanilla", 0.1, 3, 1.0 / 3.0));
    std::stringstream ss;
    write_results_csv(ss, rows);
    const std::string first = ss.str();
    const auto back = read_results_csv(ss);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) EXPECT_EQ(back[k], rows[k]);
    EXPECT_NEAR(back.back().gap, 1.0 / 3.0, 1e-9);
    std::stringstream again;
    write_results_csv(again, back);
    EXPECT_EQ(again.str(), first);
    std::stringstream bad("env,method\n");
    EXPECT_THROW(read_results_csv(bad), io::FormatError);
}

TEST(Summary, SingleRowHasZeroStd) {
    const auto s = summarize({sample_row("taxi", "vanilla", 0.25, 1, 2.0)});
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].gap.mean, 2.0);
    EXPECT_EQ(s[0].gap.std, 0.0);
    EXPECT_EQ(s[0].runs, 1u);
}

TEST(Summary, GroupsByEnvMethodAndLevel) {
    std::vector<ResultRow> rows;
    for (double eps : challenge_levels())
        for (std::uint64_t s = 1; s <= 5; ++s) rows.push_back(sample_row("cliffwalking", "vanilla", eps, s, eps + s));
    rows.push_back(sample_row("cliffwalking", "l2", 0.0, 1, 1.0));
    rows.push_back(sample_row("taxi", "vanilla", 0.0, 1, 1.0));
    const auto s = summarize(rows);
    EXPECT_EQ(s.size(), 7u);
    const auto h3 = summarize(std::vector<ResultRow>(rows.begin(), rows.begin() + 25));
    ASSERT_EQ(h3.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(h3[k].challenge_eps, challenge_levels()[k]);
        EXPECT_EQ(h3[k].runs, 5u);
        EXPECT_NEAR(h3[k].gap.mean, challenge_levels()[k] + 3.0, 1e-12);
        EXPECT_NEAR(h3[k].gap.std, std::sqrt(2.5), 1e-12);
    }
}

TEST(Summary, SeedOrderDoesNotMatter) {
    std::vector<ResultRow> rows;
    for (std::uint64_t s = 1; s <= 5; ++s) rows.push_back(sample_row("taxi", "vanilla", 0.25, s, std::sqrt(double(s))));
    auto shuffled = rows;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[1], shuffled[3]);
    const auto a = summarize(rows), b = summarize(shuffled);
    EXPECT_NEAR(a[0].gap.mean, b[0].gap.mean, 1e-15);
    EXPECT_NEAR(a[0].gap.std, b[0].gap.std, 1e-15);
}

TEST(Emit, WritesResultsSummaryAndCurves) {
    const auto dir = std::filesystem::temp_directory_path() / "rrl_emit_test";
    std::filesystem::remove_all(dir);
    std::vector<ResultRow> rows;
    for (double eps : challenge_levels())
        for (std::uint64_t s = 1; s <= 5; ++s) rows.push_back(sample_row("taxi", "vanilla", eps, s, eps * s));
    for (const char* m : {"l2", "layer_norm"})
        for (std::uint64_t s = 1; s <= 5; ++s) rows.push_back(sample_row("taxi", m, 0.1, s, 0.1));
    const auto res = aggregate_and_emit(rows, dir);
    EXPECT_TRUE(res.violations.empty());
    EXPECT_TRUE(std::filesystem::exists(dir / "results.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "curves_taxi_vanilla_by_level.tsv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "curves_taxi_eps0.1_by_method.tsv"));
    std::ifstream curve(dir / "curves_taxi_vanilla_by_level.tsv");
    std::string line;
    std::size_t lines = 0;
    std::getline(curve, line);
    EXPECT_EQ(line, "x\ty\tyerr");
    while (std::getline(curve, line)) ++lines;
    EXPECT_EQ(lines, 5u);
    std::ifstream summary(dir / "summary.csv");
    lines = 0;
    while (std::getline(summary, line)) ++lines;
    EXPECT_EQ(lines, 1u + 7u);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(aggregate_and_emit({}, dir), std::invalid_argument);
}

TEST(Emit, FlagsInconsistentRows) {
    auto r = sample_row("taxi", "vanilla", 0.25, 1, 2.0);
    r.decomposition_rhs = 1.0;
    r.total_bound = 1.5;
    r.empirical_risk = 3.0;
    EXPECT_EQ(check_rows({r}).size(), 3u);
}

TEST(Config, ParseAndApply) {
    std::stringstream ss(
        "# sweep\nenvironment = taxi\nmethod = weight_norm\nchallenge_eps = 0.3\nseeds = 3, 4\n"
        "episodes = 100  # short\ngamma=1.0\ndomain_randomization = 0, 0.2\n");
    ExperimentSpec spec;
    apply_config(parse_config(ss), spec);
    EXPECT_EQ(spec.environment, "taxi");
    EXPECT_EQ(spec.method, Method::weight_norm);
    EXPECT_EQ(spec.train_challenge_eps, 0.3);
    EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(spec.train.episodes, 100u);
    EXPECT_EQ(spec.train.gamma, 1.0);
    EXPECT_EQ(spec.randomization_levels, (std::vector<double>{0.0, 0.2}));
    std::stringstream unknown("learning_rat = 0.1\n");
    EXPECT_THROW(apply_config(parse_config(unknown), spec), std::invalid_argument);
    std::stringstream bad_value("episodes = many\n");
    EXPECT_THROW(apply_config(parse_config(bad_value), spec), std::invalid_argument);
    std::stringstream no_eq("episodes 5\n");
    EXPECT_THROW(parse_config(no_eq), std::invalid_argument);
}

TEST(Spec, MethodsMapToTrainingConfig) {
    ExperimentSpec spec;
    spec.train_challenge_eps = 0.25;
    for (Method m : comparison_methods()) {
        spec.method = m;
        const auto c = spec.train_config(7);
        EXPECT_EQ(c.seed, 7u);
        EXPECT_EQ(c.challenge_eps, 0.25);
        EXPECT_EQ(c.domain_randomization.has_value(), m == Method::domain_randomization);
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    spec.method = Method::domain_randomization;
    EXPECT_NEAR(spec.measured_train_eps(), 0.25, 1e-15);
    spec.seeds.clear();
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    EXPECT_THROW(parse_method("dropout"), std::invalid_argument);
}

TEST(RunExperiment, DeterministicAndConsistent) {
    AnalysisCache cache;
    const auto spec = quick_spec("cliffwalking", Method::l2, 0.3);
    const auto a = run_experiment(spec, 1, cache);
    const auto b = run_experiment(spec, 1, cache);
    EXPECT_EQ(a.row, b.row);
    EXPECT_EQ(a.row.gap, std::abs(a.row.expected_risk - a.row.empirical_risk));
    EXPECT_LE(a.row.gap, a.row.decomposition_rhs + 1e-9);
    EXPECT_TRUE(check_rows({a.row}).empty());
    EXPECT_EQ(a.row.method, "l2");
    EXPECT_EQ(a.row.seed, 1u);
    EXPECT_NE(run_experiment(spec, 2, cache).row, a.row);
}

TEST(RunExperiment, NoShiftMeansNoExtrinsicGap) {
    AnalysisCache cache;
    const auto r = run_experiment(quick_spec("cliffwalking", Method::vanilla, 0.0), 3, cache).row;
    EXPECT_EQ(r.extrinsic_sum, 0.0);
}

TEST(RunExperiment, StageNameInErrors) {
    AnalysisCache cache;
    auto spec = quick_spec("cliffwalking", Method::vanilla, 0.0);
    spec.train.hidden_dim = 0;
    try {
        run_experiment(spec, 1, cache);
        ADD_FAILURE();
    } catch (const std::exception& e) {
        EXPECT_NE(std::string(e.what()).find("stage training"), std::string::npos) << e.what();
    }
}

TEST(Sweeps, ShapesAndOrdering) {
    ExperimentSpec base;
    base.environment = "taxi";
    const auto h3 = h3_specs(base);
    ASSERT_EQ(h3.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(h3[k].train_challenge_eps, challenge_levels()[k]);
        EXPECT_EQ(h3[k].method, Method::vanilla);
        EXPECT_EQ(h3[k].seeds.size(), 5u);
    }
    const auto h12 = h1_h2_specs(base);
    ASSERT_EQ(h12.size(), 5u);
    for (const auto& s : h12) EXPECT_EQ(s.train_challenge_eps, kComparisonChallenge);
    AnalysisCache cache;
    auto spec = quick_spec("cliffwalking", Method::vanilla, 0.1);
    spec.seeds = {2, 1};
    const auto runs = run_all({spec}, 2, cache);
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_EQ(runs[0].row.seed, 1u);
    spec.seeds = {1, 2};
    const auto again = run_all({spec}, 1, cache);
    EXPECT_EQ(rows_of(again), rows_of(runs));
}
