// Command-line front end: sweeps, single-point reports and the self test.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rflstd/errors.hpp"
#include "rflstd/selftest.hpp"
#include "rflstd/sweep.hpp"
#include "rflstd/sweep_config.hpp"

namespace {

int run_sweep_command(const std::string &config_path, const std::string &out_dir, int jobs) {
    const rflstd::SweepConfig cfg = rflstd::load_sweep_config(config_path);
    std::filesystem::path dir = out_dir;
    if (dir.empty()) {
        if (!cfg.output) throw rflstd::ConfigError("no output directory: pass --out or set 'output' in the config");
        dir = *cfg.output;
    }
    rflstd::SweepOptions options;
    options.jobs = jobs;
    options.seed_offset = rflstd::seed_offset_from_env();
    const rflstd::SweepResult result = rflstd::run_sweep(cfg, options);
    rflstd::write_sweep_outputs(result, dir);
    std::cout << "wrote " << result.rows.size() << " rows to " << (dir / "sweep.csv").string() << "\n";
    if (result.hard_failures > 0) {
        std::cerr << result.hard_failures << " grid point(s) failed for every instance\n";
        return 3;
    }
    return 0;
}

int run_point_command(const std::string &config_path, double ratio, double lambda, std::uint64_t seed) {
    const rflstd::SweepConfig cfg = rflstd::load_sweep_config(config_path);
    const std::int64_t shifted = static_cast<std::int64_t>(seed) + rflstd::seed_offset_from_env();
    if (shifted < 0) throw rflstd::ConfigError("seed offset produces a negative feature seed");
    const rflstd::PointReport report = rflstd::evaluate_point(cfg, ratio, lambda, static_cast<std::uint64_t>(shifted));
    std::cout << rflstd::format_point_report(report);
    return report.fit_ok || report.theory_ok ? 0 : 3;
}

int run_selftest_command() {
    int failed = 0;
    for (const auto &check : rflstd::run_selftest()) {
        std::cout << (check.passed ? "PASS  " : "FAIL  ") << check.name << "  (" << check.detail << ")\n";
        if (!check.passed) ++failed;
    }
    std::cout << (failed == 0 ? "all checks passed\n" : std::to_string(failed) + " check(s) failed\n");
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Regularized LSTD with random features: sweeps and deterministic equivalents"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    auto *sweep = app.add_subcommand("sweep", "Run a ratio x lambda grid and write sweep.csv and summary.json");
    sweep->add_option("--config", config_path, "YAML sweep configuration")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "Output directory (overrides 'output' in the config)");
    sweep->add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

    double ratio = 1.0;
    double lambda = 1e-9;
    std::uint64_t seed = 1;
    auto *point = app.add_subcommand("point", "Report everything about one configuration");
    point->add_option("--config", config_path, "YAML sweep configuration")->required()->check(CLI::ExistingFile);
    point->add_option("--ratio", ratio, "N/m")->required()->check(CLI::PositiveNumber);
    point->add_option("--lambda", lambda, "Scaled regularization")->required()->check(CLI::PositiveNumber);
    point->add_option("--seed", seed, "Feature seed")->required();

    auto *selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) return run_sweep_command(config_path, out_dir, jobs);
        if (*point) return run_point_command(config_path, ratio, lambda, seed);
        if (*selftest) return run_selftest_command();
    } catch (const rflstd::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
