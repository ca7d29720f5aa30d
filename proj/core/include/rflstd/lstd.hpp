#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rflstd/features.hpp"
#include "rflstd/mrp.hpp"

namespace rflstd {

/// One-hot bookkeeping that turns a transition dataset into matrix algebra.
///
/// The visited set is every distinct state appearing in the dataset (current
/// or next), sorted by global index. Row j of U_hat / V_hat corresponds to
/// visited_ids[j]; column i of sqrt(n) U_hat is the one-hot code of the i-th
/// state, column i of sqrt(n) V_hat the code of its next state (all zero when
/// the next state was removed by pathwise_adjustment).
struct EmpiricalOperators {
    int n = 0;
    int m = 0;
    int num_states = 0;
    double discount = 0.0;

    std::vector<int> visited_ids;
    std::vector<int> column_rows;       // visited row of state i, per column
    std::vector<int> next_column_rows;  // visited row of next state i, or kNoState
    Eigen::VectorXi counts;             // c: occurrences in X
    Eigen::VectorXi next_counts;        // c': occurrences in X'

    Eigen::MatrixXd U_hat;   // m x n
    Eigen::MatrixXd V_hat;   // m x n
    Eigen::MatrixXd A_hat;   // m x m, U_hat (U_hat - gamma V_hat)^T
    Eigen::MatrixXd U_full;  // p x n
    Eigen::MatrixXd V_full;  // p x n

    /// U_hat - gamma V_hat.
    [[nodiscard]] Eigen::MatrixXd K_hat() const { return U_hat - discount * V_hat; }

    /// U_hat x for x of length n, without touching the dense matrix.
    [[nodiscard]] Eigen::VectorXd u_times(const Eigen::VectorXd &x) const;

    /// (U_hat - gamma V_hat)^T y for y of length m.
    [[nodiscard]] Eigen::VectorXd k_transpose_times(const Eigen::VectorXd &y) const;

    /// (U_hat - gamma V_hat)(U_hat - gamma V_hat)^T, assembled from counts.
    [[nodiscard]] Eigen::MatrixXd k_gram() const;

    /// Columns of S belonging to the visited states (d x m).
    [[nodiscard]] Eigen::MatrixXd visited_states(const Eigen::MatrixXd &S) const;
};

EmpiricalOperators build_operators(const TransitionDataset &ds, int num_states, double discount);

struct SpectrumReport {
    double xi_min = 0.0;
    double xi_max = 0.0;
    bool pd = false;               // H(A_hat) positive definite
    bool count_condition = false;  // c >= gamma c' for every visited state
};

/// Extreme eigenvalues of the symmetric part of A_hat and the sufficient count condition.
SpectrumReport check_spectrum_assumption(const EmpiricalOperators &ops);

/// Copy of a single-path dataset with the last next-state contribution removed.
TransitionDataset pathwise_adjustment(const TransitionDataset &ds);

/// Fits above this condition estimate are rejected.
inline constexpr double kMaxResolventCondition = 1e14;

struct LstdSolution {
    Eigen::VectorXd theta;
    double lambda = 0.0;  // scaled regularization lambda_{m,n} / (m n)
    /// lambda Q_m(lambda) r, which equals the empirical Bellman residual r + gamma Sigma_X'^T theta - Sigma_X^T theta.
    Eigen::VectorXd scaled_resolvent_r;
    double condition_estimate = 0.0;
};

/// Regularized LSTD with random features.
///
/// theta = (1/(mn)) Sigma_X Q_m(lambda) r. The solve runs on the m x m system
/// ((1/m) A_hat G + lambda I) y = U_hat r, G = Sigma_hat^T Sigma_hat, which
/// shares its spectrum with the nonzero part of Q_m^{-1} - lambda I.
/// Throws NumericalError when the condition estimate exceeds kMaxResolventCondition.
LstdSolution lstd_fit(const EmpiricalOperators &ops, const FeatureMap &fm, const Eigen::MatrixXd &S_visited,
                      const Eigen::VectorXd &r, double lambda);

/// Feature-space form: [Sigma_X (Sigma_X - gamma Sigma_X')^T + lambda m n I_N]^{-1} Sigma_X r.
Eigen::VectorXd lstd_fit_feature_space(const TransitionDataset &ds, const FeatureMap &fm, int m, double discount,
                                       double lambda);

/// Dense n x n resolvent Q_m(lambda) for the visited feature matrix Sigma_hat (N x m).
Eigen::MatrixXd resolvent(const EmpiricalOperators &ops, const Eigen::MatrixXd &Sigma_hat, double lambda);

/// Feature matrix of X' honoring a zeroed last next state.
Eigen::MatrixXd next_state_features(const TransitionDataset &ds, const FeatureMap &fm);

/// (1/n)||r + gamma Sigma_X'^T theta - Sigma_X^T theta||^2, cross-checked against
/// (lambda^2/n)||Q_m r||^2. Throws ConsistencyError if the forms disagree.
double empirical_msbe(const LstdSolution &sol, const TransitionDataset &ds, const FeatureMap &fm, double discount);

/// Stationary-weighted squared Bellman residual over all states.
double true_msbe(const LstdSolution &sol, const MarkovRewardProcess &mrp, const FeatureMap &fm,
                 const StationaryDistribution &pi);

/// Stationary-weighted squared error against the true value function V.
double msve(const LstdSolution &sol, const MarkovRewardProcess &mrp, const FeatureMap &fm,
            const StationaryDistribution &pi, const Eigen::VectorXd &V);

}  // namespace rflstd
