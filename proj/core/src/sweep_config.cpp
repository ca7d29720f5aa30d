#include "rflstd/sweep_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "rflstd/errors.hpp"

namespace rflstd {

namespace {

void reject_unknown_keys(const YAML::Node &node, const std::set<std::string> &allowed, const std::string &where) {
    if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
    for (const auto &kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T read(const YAML::Node &node, const std::string &key) {
    try {
        return node[key].as<T>();
    } catch (const YAML::Exception &e) {
        throw ConfigError("bad value for '" + key + "': " + e.what());
    }
}

template <class T>
std::vector<T> read_list(const YAML::Node &node, const std::string &key) {
    const YAML::Node list = node[key];
    if (list.IsScalar()) return {read<T>(node, key)};
    if (!list.IsSequence()) throw ConfigError("'" + key + "' must be a list");
    std::vector<T> out;
    for (const auto &item : list) {
        try {
            out.push_back(item.as<T>());
        } catch (const YAML::Exception &e) {
            throw ConfigError("bad entry in '" + key + "': " + e.what());
        }
    }
    return out;
}

EnvConfig parse_env(const YAML::Node &node) {
    reject_unknown_keys(node, {"kind", "num_states", "side", "seed", "embedding_scale"}, "env");
    EnvConfig env;
    if (node["kind"]) {
        const auto kind = read<std::string>(node, "kind");
        if (kind == "synthetic") {
            env.kind = EnvKind::Synthetic;
        } else if (kind == "gridworld") {
            env.kind = EnvKind::Gridworld;
        } else {
            throw ConfigError("env.kind must be 'synthetic' or 'gridworld', got '" + kind + "'");
        }
    }
    if (node["num_states"]) env.num_states = read<int>(node, "num_states");
    if (node["side"]) env.side = read<int>(node, "side");
    if (node["seed"]) env.seed = read<std::uint64_t>(node, "seed");
    if (node["embedding_scale"]) env.embedding_scale = read<double>(node, "embedding_scale");
    return env;
}

}  // namespace

std::string EnvConfig::id() const {
    if (kind == EnvKind::Synthetic) return "synthetic-" + std::to_string(num_states);
    return "gridworld-" + std::to_string(side) + "x" + std::to_string(side);
}

bool SweepConfig::wants(const std::string &metric) const {
    return metrics.empty() || std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
}

void validate(const SweepConfig &cfg) {
    if (cfg.env.kind == EnvKind::Synthetic && cfg.env.num_states < 1) throw ConfigError("env.num_states must be >= 1");
    if (cfg.env.kind == EnvKind::Gridworld && cfg.env.side < 2) throw ConfigError("env.side must be >= 2");
    if (cfg.env.embedding_scale && !(*cfg.env.embedding_scale > 0.0)) {
        throw ConfigError("env.embedding_scale must be positive");
    }
    if (cfg.d < 1) throw ConfigError("d must be >= 1");
    if (cfg.n < 1) throw ConfigError("n must be >= 1");
    if (!(cfg.discount >= 0.0 && cfg.discount < 1.0)) throw ConfigError("discount must lie in [0, 1)");
    if (cfg.lambdas.empty()) throw ConfigError("lambdas must not be empty");
    for (double l : cfg.lambdas) {
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("every lambda must be positive and finite");
    }
    if (cfg.ratios.empty()) throw ConfigError("ratios must not be empty");
    for (double r : cfg.ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("every ratio must be positive and finite");
    }
    if (cfg.num_instances < 1) throw ConfigError("num_instances must be >= 1");
    for (const auto &metric : cfg.metrics) {
        const bool known = std::find(kInstanceMetrics.begin(), kInstanceMetrics.end(), metric) != kInstanceMetrics.end() ||
                           std::find(kTheoryMetrics.begin(), kTheoryMetrics.end(), metric) != kTheoryMetrics.end();
        if (!known) throw ConfigError("unknown metric '" + metric + "'");
    }
}

SweepConfig parse_sweep_config(const std::string &yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception &e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    reject_unknown_keys(root,
                        {"env", "d", "n", "discount", "lambdas", "ratios", "num_instances", "dataset_seed",
                         "activation", "metrics", "output"},
                        "config");

    SweepConfig cfg;
    if (root["env"]) cfg.env = parse_env(root["env"]);
    if (root["d"]) cfg.d = read<int>(root, "d");
    if (root["n"]) cfg.n = read<int>(root, "n");
    if (root["discount"]) cfg.discount = read<double>(root, "discount");
    if (root["lambdas"]) cfg.lambdas = read_list<double>(root, "lambdas");
    if (root["ratios"]) cfg.ratios = read_list<double>(root, "ratios");
    if (root["num_instances"]) cfg.num_instances = read<int>(root, "num_instances");
    if (root["dataset_seed"]) cfg.dataset_seed = read<std::uint64_t>(root, "dataset_seed");
    if (root["activation"]) {
        try {
            cfg.activation = Activation::parse(read<std::string>(root, "activation"));
        } catch (const ParameterError &e) {
            throw ConfigError(e.what());
        }
    }
    if (root["metrics"]) cfg.metrics = read_list<std::string>(root, "metrics");
    if (root["output"]) cfg.output = read<std::string>(root, "output");
    validate(cfg);
    return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_sweep_config(buffer.str());
}

}  // namespace rflstd
