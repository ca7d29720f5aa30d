#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rflstd {

/// Finite Markov reward process with deterministic per-transition rewards.
///
/// `states` holds one column per state (d x p). `transition` is row-stochastic,
/// `rewards(i, j)` is the reward collected on the move i -> j and
/// `expected_rewards(i) = sum_j transition(i, j) * rewards(i, j)`.
struct MarkovRewardProcess {
    Eigen::MatrixXd states;
    Eigen::MatrixXd transition;
    Eigen::MatrixXd rewards;
    Eigen::VectorXd expected_rewards;
    double discount = 0.0;
    double reward_bound = 1.0;
    std::uint64_t seed = 0;

    [[nodiscard]] int state_dim() const { return static_cast<int>(states.rows()); }
    [[nodiscard]] int num_states() const { return static_cast<int>(states.cols()); }
};

/// Validates the pieces and derives the expected reward vector.
/// Throws ParameterError when P is not row-stochastic, shapes disagree,
/// discount is outside [0, 1) or a reward exceeds `reward_bound`.
MarkovRewardProcess make_mrp(Eigen::MatrixXd states, Eigen::MatrixXd transition, Eigen::MatrixXd rewards,
                             double discount, double reward_bound = 1.0, std::uint64_t seed = 0);

struct StationaryDistribution {
    Eigen::VectorXd pi;

    [[nodiscard]] auto diag() const { return pi.asDiagonal(); }
};

/// Scale applied to the Gaussian state embeddings. Defaults to 1/sqrt(d).
struct EmbeddingOptions {
    std::optional<double> scale;
};

/// Dense ergodic MRP: flat-Dirichlet transition rows, uniform [0, 1] rewards,
/// Gaussian state embeddings.
MarkovRewardProcess synthetic_ergodic_mrp(int num_states, int state_dim, double discount, std::uint64_t seed,
                                          EmbeddingOptions embedding = {});

/// side x side gridworld under the uniform random policy.
///
/// Cell (x, y) has index y * side + x with y = 0 the bottom row. Moves into a
/// wall stay put. Any transition entering the goal (top-right) pays 1; the goal
/// cell itself always moves to the start cell (bottom-left) with reward 0.
MarkovRewardProcess gridworld_mrp(int side, int state_dim, double discount, std::uint64_t seed,
                                  EmbeddingOptions embedding = {});

/// Unique pi with pi^T P = pi^T and sum(pi) = 1.
/// Throws NumericalError naming the residual when the result cannot be certified.
StationaryDistribution stationary_distribution(const MarkovRewardProcess &mrp);

/// V = (I - gamma P)^{-1} rbar.
Eigen::VectorXd value_function(const MarkovRewardProcess &mrp);

/// Marker for a next state whose contribution was removed (pathwise LSTD).
inline constexpr int kNoState = -1;

/// n transitions sampled along one trajectory of an MRP.
struct TransitionDataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd rewards;
    Eigen::MatrixXd X_next;
    std::vector<int> state_ids;
    std::vector<int> next_state_ids;
    std::uint64_t seed = 0;
    bool last_next_zeroed = false;

    [[nodiscard]] int size() const { return static_cast<int>(state_ids.size()); }
};

/// Samples a path of n transitions. The first state is drawn from pi.
TransitionDataset sample_path(const MarkovRewardProcess &mrp, int n, std::uint64_t seed);

/// Same as above with a precomputed stationary distribution.
TransitionDataset sample_path(const MarkovRewardProcess &mrp, const StationaryDistribution &pi, int n,
                              std::uint64_t seed);

// Serialization. The JSON document carries a format tag and a version number;
// P and R are stored row-major and S column-major.
inline constexpr int kMrpFormatVersion = 1;

std::string mrp_to_json(const MarkovRewardProcess &mrp);
MarkovRewardProcess mrp_from_json(const std::string &text);
void save_mrp(const MarkovRewardProcess &mrp, const std::filesystem::path &path);
MarkovRewardProcess load_mrp(const std::filesystem::path &path);

}  // namespace rflstd
