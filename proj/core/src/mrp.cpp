#include "rflstd/mrp.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rflstd/errors.hpp"

namespace rflstd {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryTol = 1e-12;

Eigen::MatrixXd gaussian_embeddings(int state_dim, int num_states, const EmbeddingOptions &embedding,
                                    std::mt19937_64 &rng) {
    const double scale = embedding.scale.value_or(1.0 / std::sqrt(static_cast<double>(state_dim)));
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ParameterError("embedding scale must be positive and finite");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd states(state_dim, num_states);
    for (int j = 0; j < num_states; ++j) {
        for (int i = 0; i < state_dim; ++i) states(i, j) = scale * normal(rng);
    }
    return states;
}

void check_discount(double discount) {
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw ParameterError("discount must lie in [0, 1), got " + std::to_string(discount));
    }
}

double stationary_residual(const Eigen::MatrixXd &P, const Eigen::VectorXd &pi) {
    return (P.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
}

}  // namespace

MarkovRewardProcess make_mrp(Eigen::MatrixXd states, Eigen::MatrixXd transition, Eigen::MatrixXd rewards,
                             double discount, double reward_bound, std::uint64_t seed) {
    check_discount(discount);
    const auto p = states.cols();
    if (p < 1 || states.rows() < 1) throw ParameterError("MRP needs at least one state and one dimension");
    if (transition.rows() != p || transition.cols() != p) throw ParameterError("transition must be p x p");
    if (rewards.rows() != p || rewards.cols() != p) throw ParameterError("rewards must be p x p");
    if ((transition.array() < 0.0).any()) throw ParameterError("transition has negative entries");
    for (Eigen::Index i = 0; i < p; ++i) {
        const double row_sum = transition.row(i).sum();
        if (std::abs(row_sum - 1.0) > kRowSumTol) {
            throw ParameterError("transition row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
        }
    }
    if (!(reward_bound > 0.0)) throw ParameterError("reward bound must be positive");
    if (rewards.cwiseAbs().maxCoeff() > reward_bound) throw ParameterError("reward exceeds the configured bound");

    MarkovRewardProcess mrp;
    mrp.expected_rewards = transition.cwiseProduct(rewards).rowwise().sum();
    mrp.states = std::move(states);
    mrp.transition = std::move(transition);
    mrp.rewards = std::move(rewards);
    mrp.discount = discount;
    mrp.reward_bound = reward_bound;
    mrp.seed = seed;
    return mrp;
}

MarkovRewardProcess synthetic_ergodic_mrp(int num_states, int state_dim, double discount, std::uint64_t seed,
                                          EmbeddingOptions embedding) {
    if (num_states < 2) throw ParameterError("synthetic MRP needs num_states >= 2");
    if (state_dim < 1) throw ParameterError("state_dim must be positive");
    check_discount(discount);

    std::mt19937_64 rng(seed);
    Eigen::MatrixXd states = gaussian_embeddings(state_dim, num_states, embedding, rng);

    // Flat Dirichlet rows: normalized unit-rate exponentials.
    std::exponential_distribution<double> exponential(1.0);
    Eigen::MatrixXd P(num_states, num_states);
    for (int i = 0; i < num_states; ++i) {
        for (int j = 0; j < num_states; ++j) {
            double g = 0.0;
            while (!(g > 0.0)) g = exponential(rng);
            P(i, j) = g;
        }
        P.row(i) /= P.row(i).sum();
    }

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::MatrixXd R(num_states, num_states);
    for (int i = 0; i < num_states; ++i) {
        for (int j = 0; j < num_states; ++j) R(i, j) = uniform(rng);
    }
    return make_mrp(std::move(states), std::move(P), std::move(R), discount, 1.0, seed);
}

MarkovRewardProcess gridworld_mrp(int side, int state_dim, double discount, std::uint64_t seed,
                                  EmbeddingOptions embedding) {
    if (side < 2) throw ParameterError("gridworld side must be >= 2");
    if (state_dim < 1) throw ParameterError("state_dim must be positive");
    check_discount(discount);

    const int p = side * side;
    const auto index = [side](int x, int y) { return y * side + x; };
    const int start = index(0, 0);
    const int goal = index(side - 1, side - 1);

    std::mt19937_64 rng(seed);
    Eigen::MatrixXd states = gaussian_embeddings(state_dim, p, embedding, rng);

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(p, p);
    constexpr int kMoves[4][2] = {{0, 1}, {0, -1}, {-1, 0}, {1, 0}};
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const int s = index(x, y);
            if (s == goal) {
                P(s, start) = 1.0;
                continue;
            }
            for (const auto &move : kMoves) {
                const int nx = x + move[0];
                const int ny = y + move[1];
                const bool inside = nx >= 0 && nx < side && ny >= 0 && ny < side;
                const int target = inside ? index(nx, ny) : s;
                P(s, target) += 0.25;
            }
            if (P(s, goal) > 0.0) R(s, goal) = 1.0;
        }
    }
    return make_mrp(std::move(states), std::move(P), std::move(R), discount, 1.0, seed);
}

StationaryDistribution stationary_distribution(const MarkovRewardProcess &mrp) {
    const Eigen::MatrixXd &P = mrp.transition;
    const auto p = P.rows();
    if (p == 1) return {Eigen::VectorXd::Ones(1)};

    // (P^T - I) pi = 0 with the last balance equation replaced by sum(pi) = 1.
    Eigen::MatrixXd system = P.transpose() - Eigen::MatrixXd::Identity(p, p);
    system.row(p - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    rhs(p - 1) = 1.0;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (!lu.isInvertible()) {
        throw NumericalError("stationary distribution is not unique (reducible transition matrix)");
    }
    Eigen::VectorXd pi = lu.solve(rhs);
    // Two rounds of iterative refinement.
    for (int round = 0; round < 2; ++round) {
        const Eigen::VectorXd correction = lu.solve(rhs - system * pi);
        pi += correction;
    }
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();

    const double residual = stationary_residual(P, pi);
    if (!(residual <= kStationaryTol) || !pi.allFinite()) {
        throw NumericalError("stationary distribution residual " + std::to_string(residual) +
                             " exceeds tolerance");
    }
    return {std::move(pi)};
}

Eigen::VectorXd value_function(const MarkovRewardProcess &mrp) {
    check_discount(mrp.discount);
    const auto p = mrp.num_states();
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(p, p) - mrp.discount * mrp.transition;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd V = lu.solve(mrp.expected_rewards);
    if (!V.allFinite()) throw NumericalError("Bellman system is singular");
    return V;
}

TransitionDataset sample_path(const MarkovRewardProcess &mrp, int n, std::uint64_t seed) {
    return sample_path(mrp, stationary_distribution(mrp), n, seed);
}

TransitionDataset sample_path(const MarkovRewardProcess &mrp, const StationaryDistribution &pi, int n,
                              std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample_path needs n >= 1");
    const int p = mrp.num_states();
    if (pi.pi.size() != p) throw ParameterError("stationary distribution size does not match the MRP");

    std::vector<std::discrete_distribution<int>> rows;
    rows.reserve(p);
    for (int i = 0; i < p; ++i) {
        const Eigen::RowVectorXd row = mrp.transition.row(i);
        rows.emplace_back(row.data(), row.data() + row.size());
    }

    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> initial(pi.pi.data(), pi.pi.data() + pi.pi.size());

    TransitionDataset ds;
    ds.seed = seed;
    ds.state_ids.resize(n);
    ds.next_state_ids.resize(n);
    ds.rewards.resize(n);
    ds.X.resize(mrp.state_dim(), n);
    ds.X_next.resize(mrp.state_dim(), n);

    int current = initial(rng);
    for (int i = 0; i < n; ++i) {
        const int next = rows[current](rng);
        ds.state_ids[i] = current;
        ds.next_state_ids[i] = next;
        ds.rewards(i) = mrp.rewards(current, next);
        ds.X.col(i) = mrp.states.col(current);
        ds.X_next.col(i) = mrp.states.col(next);
        current = next;
    }
    return ds;
}

namespace {

std::vector<double> row_major(const Eigen::MatrixXd &M) {
    std::vector<double> out;
    out.reserve(M.size());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
    }
    return out;
}

Eigen::MatrixXd from_row_major(const std::vector<double> &values, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) throw ParameterError("matrix payload has wrong size");
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = values[i * cols + j];
    }
    return M;
}

}  // namespace

std::string mrp_to_json(const MarkovRewardProcess &mrp) {
    nlohmann::json doc;
    doc["format"] = "rflstd-mrp";
    doc["version"] = kMrpFormatVersion;
    doc["state_dim"] = mrp.state_dim();
    doc["num_states"] = mrp.num_states();
    doc["discount"] = mrp.discount;
    doc["reward_bound"] = mrp.reward_bound;
    doc["seed"] = mrp.seed;
    doc["transition"] = row_major(mrp.transition);
    doc["rewards"] = row_major(mrp.rewards);
    doc["states"] = std::vector<double>(mrp.states.data(), mrp.states.data() + mrp.states.size());
    return doc.dump();
}

MarkovRewardProcess mrp_from_json(const std::string &text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != "rflstd-mrp") throw ParameterError("not an rflstd MRP document");
        const int version = doc.at("version").get<int>();
        if (version != kMrpFormatVersion) {
            throw ParameterError("unsupported MRP format version " + std::to_string(version));
        }
        const int d = doc.at("state_dim").get<int>();
        const int p = doc.at("num_states").get<int>();
        if (d < 1 || p < 1) throw ParameterError("MRP document has invalid dimensions");
        const auto states = doc.at("states").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(states.size()) != static_cast<Eigen::Index>(d) * p) {
            throw ParameterError("state payload has wrong size");
        }
        Eigen::MatrixXd S = Eigen::Map<const Eigen::MatrixXd>(states.data(), d, p);
        return make_mrp(std::move(S), from_row_major(doc.at("transition").get<std::vector<double>>(), p, p),
                        from_row_major(doc.at("rewards").get<std::vector<double>>(), p, p),
                        doc.at("discount").get<double>(), doc.at("reward_bound").get<double>(),
                        doc.at("seed").get<std::uint64_t>());
    } catch (const nlohmann::json::exception &e) {
        throw ParameterError(std::string("malformed MRP document: ") + e.what());
    }
}

void save_mrp(const MarkovRewardProcess &mrp, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << mrp_to_json(mrp) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

MarkovRewardProcess load_mrp(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return mrp_from_json(buffer.str());
}

}  // namespace rflstd
