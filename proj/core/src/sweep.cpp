#include "rflstd/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rflstd/errors.hpp"

namespace rflstd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GridPoint {
    double ratio = 0.0;
    double lambda = 0.0;
    int N = 0;
};

struct InstanceOutcome {
    bool ok = false;
    std::string error;
    std::vector<std::pair<std::string, double>> metrics;
};

struct TheoryOutcome {
    bool ok = false;
    std::string error;
    std::vector<std::pair<std::string, double>> metrics;
};

InstanceOutcome run_instance(const SweepConfig &cfg, const Experiment &ex, int N, double lambda, std::uint64_t seed) {
    InstanceOutcome out;
    try {
        const FeatureMap fm(N, cfg.d, cfg.activation, seed);
        const LstdSolution sol = lstd_fit(ex.ops, fm, ex.S_visited, ex.dataset.rewards, lambda);
        if (cfg.wants("empirical_msbe")) {
            out.metrics.emplace_back("empirical_msbe", empirical_msbe(sol, ex.dataset, fm, cfg.discount));
        }
        if (cfg.wants("true_msbe")) out.metrics.emplace_back("true_msbe", true_msbe(sol, ex.mrp, fm, ex.pi));
        if (cfg.wants("msve")) out.metrics.emplace_back("msve", msve(sol, ex.mrp, fm, ex.pi, ex.theory.values));
        for (const auto &[name, value] : out.metrics) {
            if (!std::isfinite(value)) throw NumericalError(name + " is not finite");
        }
        out.ok = true;
    } catch (const std::exception &e) {
        out.ok = false;
        out.error = e.what();
        out.metrics.clear();
    }
    return out;
}

TheoryOutcome run_theory(const SweepConfig &cfg, const Experiment &ex, int N, double lambda) {
    TheoryOutcome out;
    try {
        const DeterministicEquivalent de = deterministic_equivalent(ex.theory, N, lambda);
        if (cfg.wants("theory_empirical_msbe")) {
            const TheoryValue v = theoretical_empirical_msbe(ex.theory, de);
            out.metrics.emplace_back("theory_empirical_msbe", v.value);
            out.metrics.emplace_back("theory_empirical_msbe_correction", v.correction);
        }
        if (cfg.wants("theory_true_msbe")) {
            const TheoryValue v = theoretical_true_msbe(ex.theory, de);
            out.metrics.emplace_back("theory_true_msbe", v.value);
            out.metrics.emplace_back("theory_true_msbe_correction", v.correction);
        }
        if (cfg.wants("theory_msve")) {
            const TheoryValue v = theoretical_msve(ex.theory, de);
            out.metrics.emplace_back("theory_msve", v.value);
            out.metrics.emplace_back("theory_msve_correction", v.correction);
        }
        if (cfg.wants("delta")) out.metrics.emplace_back("delta", de.delta);
        out.ok = true;
    } catch (const std::exception &e) {
        out.ok = false;
        out.error = e.what();
        out.metrics.clear();
    }
    return out;
}

template <class Job>
void run_parallel(std::size_t count, int jobs, const Job &job) {
    int workers = jobs > 0 ? jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), std::max<std::size_t>(count, 1)));
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) job(i);
    };
    if (workers <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
}

std::vector<std::string> selected_instance_metrics(const SweepConfig &cfg) {
    std::vector<std::string> out;
    for (const auto &metric : kInstanceMetrics) {
        if (cfg.wants(metric)) out.push_back(metric);
    }
    return out;
}

nlohmann::ordered_json number_or_null(double value) {
    return std::isfinite(value) ? nlohmann::ordered_json(value) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json config_json(const SweepConfig &cfg) {
    nlohmann::ordered_json env;
    env["kind"] = cfg.env.kind == EnvKind::Synthetic ? "synthetic" : "gridworld";
    if (cfg.env.kind == EnvKind::Synthetic) {
        env["num_states"] = cfg.env.num_states;
    } else {
        env["side"] = cfg.env.side;
    }
    env["seed"] = cfg.env.seed;
    if (cfg.env.embedding_scale) env["embedding_scale"] = *cfg.env.embedding_scale;

    nlohmann::ordered_json j;
    j["env"] = env;
    j["d"] = cfg.d;
    j["n"] = cfg.n;
    j["discount"] = cfg.discount;
    j["lambdas"] = cfg.lambdas;
    j["ratios"] = cfg.ratios;
    j["num_instances"] = cfg.num_instances;
    j["dataset_seed"] = cfg.dataset_seed;
    j["activation"] = std::string(cfg.activation.name());
    j["metrics"] = cfg.metrics;
    return j;
}

}  // namespace

MarkovRewardProcess build_environment(const SweepConfig &cfg) {
    EmbeddingOptions embedding;
    embedding.scale = cfg.env.embedding_scale;
    if (cfg.env.kind == EnvKind::Synthetic) {
        return synthetic_ergodic_mrp(cfg.env.num_states, cfg.d, cfg.discount, cfg.env.seed, embedding);
    }
    return gridworld_mrp(cfg.env.side, cfg.d, cfg.discount, cfg.env.seed, embedding);
}

Experiment prepare_experiment(const SweepConfig &cfg) {
    validate(cfg);
    Experiment ex;
    ex.mrp = build_environment(cfg);
    ex.pi = stationary_distribution(ex.mrp);
    ex.dataset = sample_path(ex.mrp, ex.pi, cfg.n, cfg.dataset_seed);
    ex.ops = build_operators(ex.dataset, ex.mrp.num_states(), cfg.discount);
    ex.spectrum = check_spectrum_assumption(ex.ops);
    if (!ex.spectrum.count_condition) {
        ex.dataset = pathwise_adjustment(ex.dataset);
        ex.adjusted = true;
        ex.ops = build_operators(ex.dataset, ex.mrp.num_states(), cfg.discount);
        ex.spectrum = check_spectrum_assumption(ex.ops);
    }
    ex.S_visited = ex.ops.visited_states(ex.mrp.states);
    ex.theory = prepare_theory(ex.ops, ex.mrp, ex.pi, cfg.activation, ex.dataset.rewards);
    return ex;
}

int features_for_ratio(double ratio, int m) {
    return std::max(1, static_cast<int>(std::lround(ratio * m)));
}

std::int64_t seed_offset_from_env() {
    const char *raw = std::getenv("RFLSTD_SEED_OFFSET");
    if (raw == nullptr || *raw == '\0') return 0;
    std::int64_t value = 0;
    const char *end = raw + std::char_traits<char>::length(raw);
    const auto [ptr, ec] = std::from_chars(raw, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(std::string("RFLSTD_SEED_OFFSET must be an integer, got '") + raw + "'");
    }
    return value;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) throw NumericalError("cannot format number");
    return std::string(buffer, ptr);
}

std::string rows_to_csv(const std::vector<SweepRow> &rows) {
    std::string out = kCsvHeader + "\n";
    for (const auto &row : rows) {
        out += row.env + "," + format_number(row.ratio) + "," + std::to_string(row.N) + "," + std::to_string(row.m) +
               "," + std::to_string(row.n) + "," + format_number(row.lambda) + "," + row.kind + "," + row.seed + "," +
               row.metric + "," + format_number(row.value) + "," + row.status + "\n";
    }
    return out;
}

SweepResult run_sweep(const SweepConfig &cfg, const SweepOptions &options) {
    const Experiment ex = prepare_experiment(cfg);
    const int m = ex.ops.m;
    const int n = ex.ops.n;
    const std::string env = cfg.env.id();

    std::vector<std::uint64_t> seeds;
    for (int i = 1; i <= cfg.num_instances; ++i) {
        const std::int64_t seed = i + options.seed_offset;
        if (seed < 0) throw ConfigError("seed offset produces a negative feature seed");
        seeds.push_back(static_cast<std::uint64_t>(seed));
    }

    std::vector<GridPoint> grid;
    for (double ratio : cfg.ratios) {
        for (double lambda : cfg.lambdas) grid.push_back({ratio, lambda, features_for_ratio(ratio, m)});
    }
    std::stable_sort(grid.begin(), grid.end(), [](const GridPoint &a, const GridPoint &b) {
        return a.ratio != b.ratio ? a.ratio < b.ratio : a.lambda < b.lambda;
    });

    const std::size_t k = seeds.size();
    std::vector<InstanceOutcome> instances(grid.size() * k);
    std::vector<TheoryOutcome> theories(grid.size());
    const std::size_t per_point = k + 1;
    run_parallel(grid.size() * per_point, options.jobs, [&](std::size_t job) {
        const std::size_t g = job / per_point;
        const std::size_t slot = job % per_point;
        if (slot == k) {
            theories[g] = run_theory(cfg, ex, grid[g].N, grid[g].lambda);
        } else {
            instances[g * k + slot] = run_instance(cfg, ex, grid[g].N, grid[g].lambda, seeds[slot]);
        }
    });

    const auto metrics = selected_instance_metrics(cfg);
    SweepResult result;
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const GridPoint &pt = grid[g];
        const auto row = [&](const std::string &kind, const std::string &seed, const std::string &metric, double value,
                             const std::string &status) {
            result.rows.push_back({env, pt.ratio, pt.N, m, n, pt.lambda, kind, seed, metric, value, status});
        };

        int failed = 0;
        for (std::size_t s = 0; s < k; ++s) {
            const InstanceOutcome &inst = instances[g * k + s];
            if (!inst.ok) ++failed;
            const std::string seed = std::to_string(seeds[s]);
            for (std::size_t j = 0; j < metrics.size(); ++j) {
                if (inst.ok) {
                    row("instance", seed, metrics[j], inst.metrics[j].second, "ok");
                } else {
                    row("instance", seed, metrics[j], kNaN, "failed");
                }
            }
        }

        const int ok = static_cast<int>(k) - failed;
        if (ok == 0) ++result.hard_failures;
        nlohmann::ordered_json mean_json;
        nlohmann::ordered_json std_json;
        for (std::size_t j = 0; j < metrics.size(); ++j) {
            std::vector<double> values;
            for (std::size_t s = 0; s < k; ++s) {
                const InstanceOutcome &inst = instances[g * k + s];
                if (inst.ok) values.push_back(inst.metrics[j].second);
            }
            double mean = kNaN;
            double sd = kNaN;
            if (!values.empty()) mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
            if (values.size() >= 2) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                sd = std::sqrt(ss / (values.size() - 1));
            }
            row("mean", "mean", metrics[j], mean, std::isfinite(mean) ? "ok" : "failed");
            mean_json[metrics[j]] = number_or_null(mean);
            std_json[metrics[j]] = number_or_null(sd);
        }
        for (std::size_t j = 0; j < metrics.size(); ++j) {
            row("std", "std", metrics[j], std_json[metrics[j]].is_null() ? kNaN : std_json[metrics[j]].get<double>(),
                std_json[metrics[j]].is_null() ? "failed" : "ok");
        }
        if (failed > 0) row("failed_count", "failed_count", "instances", failed, "ok");

        const TheoryOutcome &th = theories[g];
        nlohmann::ordered_json theory_json;
        if (th.ok) {
            for (const auto &[name, value] : th.metrics) {
                row("theory", "theory", name, value, "ok");
                theory_json[name] = number_or_null(value);
            }
        } else {
            for (const auto &name : kTheoryMetrics) {
                if (cfg.wants(name)) row("theory", "theory", name, kNaN, "failed");
            }
        }

        nlohmann::ordered_json point;
        point["ratio"] = pt.ratio;
        point["N"] = pt.N;
        point["lambda"] = pt.lambda;
        point["instances_ok"] = ok;
        point["instances_failed"] = failed;
        if (failed > 0) {
            nlohmann::ordered_json errors = nlohmann::ordered_json::array();
            for (std::size_t s = 0; s < k; ++s) {
                const InstanceOutcome &inst = instances[g * k + s];
                if (!inst.ok) errors.push_back({{"seed", seeds[s]}, {"error", inst.error}});
            }
            point["failures"] = errors;
        }
        point["mean"] = mean_json;
        point["std"] = std_json;
        point["theory"] = theory_json;
        if (!th.ok) point["theory_error"] = th.error;
        points.push_back(point);
    }

    nlohmann::ordered_json summary;
    summary["env"] = env;
    summary["config"] = config_json(cfg);
    summary["seed_offset"] = options.seed_offset;
    summary["num_states"] = ex.mrp.num_states();
    summary["m"] = m;
    summary["n"] = n;
    summary["pathwise_adjusted"] = ex.adjusted;
    summary["spectrum"] = {{"xi_min", ex.spectrum.xi_min},
                           {"xi_max", ex.spectrum.xi_max},
                           {"pd", ex.spectrum.pd},
                           {"count_condition", ex.spectrum.count_condition}};
    summary["phi_jitter"] = ex.theory.spectrum.jitter;
    summary["hard_failures"] = result.hard_failures;
    summary["points"] = points;
    result.summary_json = summary.dump(2) + "\n";
    return result;
}

void write_sweep_outputs(const SweepResult &result, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto write = [](const std::filesystem::path &path, const std::string &text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << text;
        if (!out) throw ConfigError("write failed for " + path.string());
    };
    write(dir / "sweep.csv", rows_to_csv(result.rows));
    write(dir / "summary.json", result.summary_json);
}

PointReport evaluate_point(const SweepConfig &cfg, double ratio, double lambda, std::uint64_t seed) {
    if (!(ratio > 0.0)) throw ConfigError("ratio must be positive");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    const Experiment ex = prepare_experiment(cfg);

    PointReport r;
    r.env = cfg.env.id();
    r.p = ex.mrp.num_states();
    r.m = ex.ops.m;
    r.n = ex.ops.n;
    r.N = features_for_ratio(ratio, r.m);
    r.ratio = ratio;
    r.lambda = lambda;
    r.seed = seed;
    r.adjusted = ex.adjusted;
    r.spectrum = ex.spectrum;
    r.b_jitter = ex.theory.spectrum.jitter;

    try {
        const DeterministicEquivalent de = deterministic_equivalent(ex.theory, r.N, lambda);
        r.delta = de.delta;
        r.delta_evaluations = de.solve.evaluations;
        r.denominator = de.denominator;
        r.theory_empirical = theoretical_empirical_msbe(ex.theory, de);
        r.theory_true = theoretical_true_msbe(ex.theory, de);
        r.theory_msve = theoretical_msve(ex.theory, de);
        r.theory_ok = true;
    } catch (const std::exception &e) {
        r.theory_error = e.what();
    }

    try {
        const FeatureMap fm(r.N, cfg.d, cfg.activation, seed);
        const LstdSolution sol = lstd_fit(ex.ops, fm, ex.S_visited, ex.dataset.rewards, lambda);
        r.condition_estimate = sol.condition_estimate;
        r.empirical_msbe = empirical_msbe(sol, ex.dataset, fm, cfg.discount);
        r.true_msbe = true_msbe(sol, ex.mrp, fm, ex.pi);
        r.msve = msve(sol, ex.mrp, fm, ex.pi, ex.theory.values);
        r.fit_ok = true;
    } catch (const std::exception &e) {
        r.fit_error = e.what();
    }
    return r;
}

std::string format_point_report(const PointReport &r) {
    std::ostringstream out;
    out.precision(10);
    out << "env                " << r.env << "\n"
        << "states |S|         " << r.p << "\n"
        << "visited m          " << r.m << "\n"
        << "transitions n      " << r.n << "\n"
        << "features N         " << r.N << " (ratio " << r.ratio << ")\n"
        << "lambda             " << r.lambda << "\n"
        << "feature seed       " << r.seed << "\n"
        << "pathwise adjusted  " << (r.adjusted ? "yes" : "no") << "\n"
        << "count condition    " << (r.spectrum.count_condition ? "holds" : "fails") << "\n"
        << "H(A_hat) spectrum  [" << r.spectrum.xi_min << ", " << r.spectrum.xi_max << "]"
        << (r.spectrum.pd ? " positive definite" : " NOT positive definite") << "\n"
        << "Phi_hat jitter     " << r.b_jitter << "\n";
    out << "\ntheory\n";
    if (r.theory_ok) {
        out << "  delta                  " << r.delta << " (" << r.delta_evaluations << " map evaluations)\n"
            << "  denominator            " << r.denominator << "\n"
            << "  empirical MSBE         " << r.theory_empirical.value << " = " << r.theory_empirical.main << " + "
            << r.theory_empirical.correction << "\n"
            << "  true MSBE              " << r.theory_true.value << " = " << r.theory_true.main << " + "
            << r.theory_true.correction << "\n"
            << "  MSVE                   " << r.theory_msve.value << " = " << r.theory_msve.main << " + "
            << r.theory_msve.correction << "\n";
    } else {
        out << "  failed: " << r.theory_error << "\n";
    }
    out << "\nfit\n";
    if (r.fit_ok) {
        out << "  condition estimate     " << r.condition_estimate << "\n"
            << "  empirical MSBE         " << r.empirical_msbe << "\n"
            << "  true MSBE              " << r.true_msbe << "\n"
            << "  MSVE                   " << r.msve << "\n";
    } else {
        out << "  failed: " << r.fit_error << "\n";
    }
    return out.str();
}

}  // namespace rflstd
