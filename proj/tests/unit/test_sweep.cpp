#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rflstd/errors.hpp"
#include "rflstd/sweep.hpp"
#include "rflstd/sweep_config.hpp"

using namespace rflstd;

namespace {

SweepConfig small_config() {
    SweepConfig cfg;
    cfg.env.num_states = 12;
    cfg.d = 4;
    cfg.n = 30;
    cfg.lambdas = {1e-3};
    cfg.ratios = {1.0};
    cfg.num_instances = 2;
    return cfg;
}

int count_kind(const SweepResult &r, const std::string &kind) {
    return static_cast<int>(std::count_if(r.rows.begin(), r.rows.end(), [&](const SweepRow &row) { return row.kind == kind; }));
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(SweepConfig, ParsesEveryKey) {
    const auto cfg = parse_sweep_config(R"(
env:
  kind: gridworld
  side: 5
  seed: 3
  embedding_scale: 0.5
d: 7
n: 50
discount: 0.9
lambdas: [1.0e-6, 0.001]
ratios: [0.5, 2]
num_instances: 4
dataset_seed: 9
activation: abs
metrics: [true_msbe, delta]
output: out/dir
)");
    EXPECT_EQ(cfg.env.kind, EnvKind::Gridworld);
    EXPECT_EQ(cfg.env.side, 5);
    EXPECT_EQ(cfg.env.seed, 3u);
    EXPECT_EQ(cfg.env.embedding_scale.value(), 0.5);
    EXPECT_EQ(cfg.env.id(), "gridworld-5x5");
    EXPECT_EQ(cfg.d, 7);
    EXPECT_EQ(cfg.n, 50);
    EXPECT_EQ(cfg.discount, 0.9);
    EXPECT_EQ(cfg.lambdas, (std::vector<double>{1e-6, 1e-3}));
    EXPECT_EQ(cfg.ratios, (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(cfg.num_instances, 4);
    EXPECT_EQ(cfg.dataset_seed, 9u);
    EXPECT_EQ(cfg.activation.name(), "abs");
    EXPECT_TRUE(cfg.wants("true_msbe"));
    EXPECT_FALSE(cfg.wants("msve"));
    EXPECT_EQ(cfg.output.value(), "out/dir");
}

TEST(SweepConfig, DefaultsWhenEmpty) {
    const auto cfg = parse_sweep_config("{}");
    EXPECT_EQ(cfg.env.id(), "synthetic-100");
    EXPECT_EQ(cfg.n, 300);
    EXPECT_TRUE(cfg.wants("msve"));
    EXPECT_TRUE(cfg.wants("delta"));
}

TEST(SweepConfig, RejectsBadInput) {
    EXPECT_THROW(parse_sweep_config("bogus: 1"), ConfigError);
    EXPECT_THROW(parse_sweep_config("env: {kind: synthetic, colour: red}"), ConfigError);
    EXPECT_THROW(parse_sweep_config("env: {kind: maze}"), ConfigError);
    EXPECT_THROW(parse_sweep_config("lambdas: [0]"), ConfigError);
    EXPECT_THROW(parse_sweep_config("ratios: []"), ConfigError);
    EXPECT_THROW(parse_sweep_config("discount: 1.0"), ConfigError);
    EXPECT_THROW(parse_sweep_config("n: many"), ConfigError);
    EXPECT_THROW(parse_sweep_config("metrics: [accuracy]"), ConfigError);
    EXPECT_THROW(parse_sweep_config("activation: tanh"), ConfigError);
    EXPECT_THROW(parse_sweep_config("lambdas: [1, 2"), ConfigError);
    EXPECT_THROW(load_sweep_config("/nonexistent/config.yaml"), ConfigError);
}

TEST(Sweep, FeaturesForRatio) {
    EXPECT_EQ(features_for_ratio(0.5, 91), 46);
    EXPECT_EQ(features_for_ratio(1.0, 91), 91);
    EXPECT_EQ(features_for_ratio(1e-6, 91), 1);
}

TEST(Sweep, RowCountsForSmallGrid) {
    const auto result = run_sweep(small_config());
    // 2 instances x 3 metrics, 3 means, 3 stds, 3 theory values + 3 corrections + delta.
    EXPECT_EQ(count_kind(result, "instance"), 6);
    EXPECT_EQ(count_kind(result, "mean"), 3);
    EXPECT_EQ(count_kind(result, "std"), 3);
    EXPECT_EQ(count_kind(result, "theory"), 7);
    EXPECT_EQ(count_kind(result, "failed_count"), 0);
    EXPECT_EQ(result.rows.size(), 19u);
    EXPECT_EQ(result.hard_failures, 0);
    for (const auto &row : result.rows) {
        EXPECT_EQ(row.status, "ok");
        EXPECT_EQ(row.env, "synthetic-12");
        EXPECT_EQ(row.N, row.m);
    }
}

TEST(Sweep, MetricSelectionLimitsRows) {
    auto cfg = small_config();
    cfg.metrics = {"true_msbe", "theory_true_msbe"};
    const auto result = run_sweep(cfg);
    EXPECT_EQ(count_kind(result, "instance"), 2);
    EXPECT_EQ(count_kind(result, "theory"), 2);
    for (const auto &row : result.rows) EXPECT_NE(row.metric.find("true_msbe"), std::string::npos);
}

TEST(Sweep, GridIsOrderedByRatioThenLambda) {
    auto cfg = small_config();
    cfg.ratios = {1.5, 0.5};
    cfg.lambdas = {1e-2, 1e-4};
    cfg.num_instances = 1;
    const auto result = run_sweep(cfg);
    std::vector<std::pair<double, double>> seen;
    for (const auto &row : result.rows) {
        if (seen.empty() || seen.back() != std::make_pair(row.ratio, row.lambda)) seen.emplace_back(row.ratio, row.lambda);
    }
    const std::vector<std::pair<double, double>> expected{{0.5, 1e-4}, {0.5, 1e-2}, {1.5, 1e-4}, {1.5, 1e-2}};
    EXPECT_EQ(seen, expected);
    for (const auto &row : result.rows) {
        if (row.kind == "std") EXPECT_EQ(row.status, "failed");
    }
}

TEST(Sweep, DeterministicAcrossRunsAndWorkers) {
    auto cfg = small_config();
    cfg.ratios = {0.5, 1.5};
    cfg.num_instances = 3;
    const auto a = run_sweep(cfg);
    SweepOptions parallel;
    parallel.jobs = 3;
    const auto b = run_sweep(cfg, parallel);
    EXPECT_EQ(rows_to_csv(a.rows), rows_to_csv(b.rows));
    EXPECT_EQ(a.summary_json, b.summary_json);
}

TEST(Sweep, AggregatesMatchInstanceRows) {
    auto cfg = small_config();
    cfg.num_instances = 4;
    const auto result = run_sweep(cfg);
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, double> mean;
    std::map<std::string, double> sd;
    for (const auto &row : result.rows) {
        if (row.kind == "instance") values[row.metric].push_back(row.value);
        if (row.kind == "mean") mean[row.metric] = row.value;
        if (row.kind == "std") sd[row.metric] = row.value;
    }
    ASSERT_EQ(values.size(), 3u);
    for (const auto &[metric, v] : values) {
        double sum = 0.0;
        for (double x : v) sum += x;
        const double mu = sum / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - mu) * (x - mu);
        EXPECT_NEAR(mean[metric], mu, 1e-12 * std::abs(mu));
        EXPECT_NEAR(sd[metric], std::sqrt(ss / (v.size() - 1)), 1e-12 * std::abs(mu));
    }
}

TEST(Sweep, SeedOffsetShiftsInstanceSeeds) {
    auto cfg = small_config();
    SweepOptions shifted;
    shifted.seed_offset = 10;
    const auto result = run_sweep(cfg, shifted);
    std::vector<std::string> seeds;
    for (const auto &row : result.rows) {
        if (row.kind == "instance" && row.metric == "true_msbe") seeds.push_back(row.seed);
    }
    EXPECT_EQ(seeds, (std::vector<std::string>{"11", "12"}));
    SweepOptions negative;
    negative.seed_offset = -5;
    EXPECT_THROW(run_sweep(cfg, negative), ConfigError);
}

TEST(Sweep, SeedOffsetFromEnvironment) {
    ::unsetenv("RFLSTD_SEED_OFFSET");
    EXPECT_EQ(seed_offset_from_env(), 0);
    ::setenv("RFLSTD_SEED_OFFSET", "17", 1);
    EXPECT_EQ(seed_offset_from_env(), 17);
    ::setenv("RFLSTD_SEED_OFFSET", "x17", 1);
    EXPECT_THROW(seed_offset_from_env(), ConfigError);
    ::unsetenv("RFLSTD_SEED_OFFSET");
}

TEST(Sweep, NumberFormatting) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1e-9), "1e-09");
    EXPECT_EQ(format_number(std::nan("")), "nan");
    const double x = 0.123456789012345678;
    EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Sweep, WritesCsvAndSummary) {
    const auto dir = std::filesystem::temp_directory_path() / "rflstd_test_sweep_outputs";
    std::filesystem::remove_all(dir);
    const auto result = run_sweep(small_config());
    write_sweep_outputs(result, dir);
    const std::string csv = slurp(dir / "sweep.csv");
    EXPECT_EQ(csv.substr(0, kCsvHeader.size() + 1), kCsvHeader + "\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 20);
    EXPECT_EQ(slurp(dir / "summary.json"), result.summary_json);
    EXPECT_NE(result.summary_json.find("\"points\""), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Sweep, TheoryRowsMatchSinglePointReport) {
    const auto cfg = small_config();
    const auto result = run_sweep(cfg);
    const auto report = evaluate_point(cfg, 1.0, 1e-3, 1);
    ASSERT_TRUE(report.theory_ok);
    ASSERT_TRUE(report.fit_ok);
    for (const auto &row : result.rows) {
        if (row.kind == "theory" && row.metric == "delta") EXPECT_EQ(row.value, report.delta);
        if (row.kind == "theory" && row.metric == "theory_true_msbe") EXPECT_EQ(row.value, report.theory_true.value);
        if (row.kind == "instance" && row.seed == "1" && row.metric == "true_msbe") EXPECT_EQ(row.value, report.true_msbe);
    }
    const std::string text = format_point_report(report);
    EXPECT_NE(text.find("delta"), std::string::npos);
}

TEST(Sweep, GridworldEnvironmentRuns) {
    auto cfg = small_config();
    cfg.env.kind = EnvKind::Gridworld;
    cfg.env.side = 3;
    const auto result = run_sweep(cfg);
    EXPECT_EQ(result.hard_failures, 0);
    EXPECT_EQ(result.rows.front().env, "gridworld-3x3");
}
