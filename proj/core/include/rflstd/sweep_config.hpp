#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rflstd/features.hpp"

namespace rflstd {

enum class EnvKind { Synthetic, Gridworld };

struct EnvConfig {
    EnvKind kind = EnvKind::Synthetic;
    int num_states = 100;  // synthetic
    int side = 8;          // gridworld
    std::uint64_t seed = 0;
    std::optional<double> embedding_scale;

    /// "synthetic-100" or "gridworld-8x8".
    [[nodiscard]] std::string id() const;
};

/// Metrics measured per feature draw.
inline const std::vector<std::string> kInstanceMetrics = {"empirical_msbe", "true_msbe", "msve"};
/// Metrics computed once per grid point.
inline const std::vector<std::string> kTheoryMetrics = {"theory_empirical_msbe", "theory_true_msbe", "theory_msve",
                                                        "delta"};

struct SweepConfig {
    EnvConfig env;
    int d = 20;
    int n = 300;
    double discount = 0.95;
    std::vector<double> lambdas = {1e-9};
    std::vector<double> ratios = {0.5, 1.0, 1.5};
    int num_instances = 10;
    std::uint64_t dataset_seed = 42;
    Activation activation{ActivationKind::ReLU};
    std::vector<std::string> metrics;  // empty selects everything
    std::optional<std::string> output;

    [[nodiscard]] bool wants(const std::string &metric) const;
};

/// Throws ConfigError on malformed input, unknown keys or invalid values.
SweepConfig parse_sweep_config(const std::string &yaml_text);
SweepConfig load_sweep_config(const std::filesystem::path &path);

void validate(const SweepConfig &cfg);

}  // namespace rflstd
