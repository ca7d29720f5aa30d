#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rflstd/lstd.hpp"
#include "rflstd/mrp.hpp"
#include "rflstd/sweep_config.hpp"
#include "rflstd/theory.hpp"

namespace rflstd {

/// Environment, dataset and (N, lambda)-independent theory inputs shared by every grid point.
struct Experiment {
    MarkovRewardProcess mrp;
    StationaryDistribution pi;
    TransitionDataset dataset;
    bool adjusted = false;  // pathwise_adjustment was applied
    EmpiricalOperators ops;
    SpectrumReport spectrum;
    Eigen::MatrixXd S_visited;
    TheoryInputs theory;
};

MarkovRewardProcess build_environment(const SweepConfig &cfg);

Experiment prepare_experiment(const SweepConfig &cfg);

/// N = round(ratio * m), at least 1.
int features_for_ratio(double ratio, int m);

/// Offset added to every feature seed, read from RFLSTD_SEED_OFFSET (default 0).
std::int64_t seed_offset_from_env();

inline const std::string kCsvHeader = "env,ratio,N,m,n,lambda,kind,seed,metric,value,status";

struct SweepRow {
    std::string env;
    double ratio = 0.0;
    int N = 0;
    int m = 0;
    int n = 0;
    double lambda = 0.0;
    std::string kind;  // instance, mean, std, theory, failed_count
    std::string seed;  // feature seed for instance rows, otherwise the kind
    std::string metric;
    double value = 0.0;
    std::string status;  // "ok" or "failed"
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int hard_failures = 0;  // grid points where every instance failed
    std::string summary_json;
};

struct SweepOptions {
    int jobs = 1;
    std::int64_t seed_offset = 0;
};

/// Runs the grid. Rows come back sorted by (ratio, lambda, kind, seed, metric)
/// and are independent of the number of workers.
SweepResult run_sweep(const SweepConfig &cfg, const SweepOptions &options = {});

/// Shortest round-trip decimal form.
std::string format_number(double value);

std::string rows_to_csv(const std::vector<SweepRow> &rows);

/// Writes <dir>/sweep.csv and <dir>/summary.json.
void write_sweep_outputs(const SweepResult &result, const std::filesystem::path &dir);

/// Everything worth knowing about a single (ratio, lambda, seed) configuration.
struct PointReport {
    std::string env;
    int p = 0;
    int m = 0;
    int n = 0;
    int N = 0;
    double ratio = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    bool adjusted = false;
    SpectrumReport spectrum;
    double b_jitter = 0.0;

    bool theory_ok = false;
    std::string theory_error;
    double delta = 0.0;
    int delta_evaluations = 0;
    double denominator = 0.0;
    TheoryValue theory_empirical;
    TheoryValue theory_true;
    TheoryValue theory_msve;

    bool fit_ok = false;
    std::string fit_error;
    double condition_estimate = 0.0;
    double empirical_msbe = 0.0;
    double true_msbe = 0.0;
    double msve = 0.0;
};

PointReport evaluate_point(const SweepConfig &cfg, double ratio, double lambda, std::uint64_t seed);

std::string format_point_report(const PointReport &report);

}  // namespace rflstd
