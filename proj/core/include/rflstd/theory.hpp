#pragma once

#include <Eigen/Dense>

#include "rflstd/delta.hpp"
#include "rflstd/features.hpp"
#include "rflstd/lstd.hpp"
#include "rflstd/mrp.hpp"

namespace rflstd {

/// Everything the deterministic equivalents need that does not depend on (N, lambda).
///
/// All n x n objects of the theory are handled through m x m compressions: with
/// c = (N/m)/(1+delta), T = (c Phi_hat A_hat + lambda I)^{-1} and
/// T' = (c A_hat Phi_hat + lambda I)^{-1}, one has Q_bar K^T = K^T T and
/// U_hat Q_bar = T' U_hat, where K = U_hat - gamma V_hat.
struct TheoryInputs {
    EmpiricalOperators ops;
    Eigen::VectorXd r;  // dataset rewards, length n

    Eigen::MatrixXd phi_states;   // Phi_S, p x p
    Eigen::MatrixXd phi_visited;  // Phi_hat, m x m
    Eigen::MatrixXd phi_cross;    // F = Phi_{S, S_hat}, p x m
    Eigen::MatrixXd k_gram;       // K K^T, m x m
    Eigen::VectorXd u_r;          // U_hat r

    Eigen::MatrixXd transition;      // P
    Eigen::VectorXd pi;              // stationary distribution
    Eigen::VectorXd expected_rewards;
    Eigen::VectorXd values;          // V
    Eigen::MatrixXd lambda_p;        // (I - gamma P)^T D_pi (I - gamma P)

    Eigen::MatrixXd f_lambda_f;  // F^T Lambda_P F
    Eigen::MatrixXd f_dpi_f;     // F^T D_pi F
    double trace_lambda_phi = 0.0;
    double trace_dpi_phi = 0.0;

    BSpectrum spectrum;

    [[nodiscard]] int n() const { return ops.n; }
    [[nodiscard]] int m() const { return ops.m; }
    [[nodiscard]] int p() const { return static_cast<int>(phi_states.rows()); }
};

TheoryInputs prepare_theory(const EmpiricalOperators &ops, const MarkovRewardProcess &mrp,
                            const StationaryDistribution &pi, Activation activation, const Eigen::VectorXd &r);

/// Deterministic equivalent at one (N, lambda), in compressed form.
struct DeterministicEquivalent {
    int N = 0;
    double lambda = 0.0;
    double ratio = 0.0;  // N / m
    double delta = 0.0;
    double scale = 0.0;  // (N/m) / (1 + delta)
    DeltaResult solve;

    Eigen::MatrixXd T;       // (c Phi_hat A_hat + lambda I)^{-1}
    Eigen::MatrixXd T_left;  // (c A_hat Phi_hat + lambda I)^{-1}
    Eigen::MatrixXd M;       // A_hat T = T_left A_hat = U_hat Q_bar K^T
    Eigen::VectorXd a;       // U_hat Q_bar r
    Eigen::VectorXd lambda_q_r;  // lambda Q_bar r, length n

    double psi1_norm = 0.0;    // ||Q_bar r||^2_{Psi_1}
    double denominator = 0.0;  // 1 - (1/N) Tr(Psi_2 Q_bar^T Psi_1 Q_bar)
};

/// Solves for delta and assembles the compressed resolvent. Throws
/// AssumptionViolation when the correction denominator is not positive.
DeterministicEquivalent deterministic_equivalent(const TheoryInputs &in, int N, double lambda,
                                                 const DeltaOptions &options = {});

struct TheoryValue {
    double value = 0.0;
    double main = 0.0;
    double correction = 0.0;
};

/// (lambda^2/n)||Q_bar r||^2 + Delta_hat.
TheoryValue theoretical_empirical_msbe(const TheoryInputs &in, const DeterministicEquivalent &de);

/// D_pi-weighted Bellman residual of the deterministic value estimate plus Delta.
TheoryValue theoretical_true_msbe(const TheoryInputs &in, const DeterministicEquivalent &de);

/// D_pi-weighted value error of the deterministic value estimate plus Delta'.
TheoryValue theoretical_msve(const TheoryInputs &in, const DeterministicEquivalent &de);

/// Delta through the identity that holds when every state is visited (m = p):
/// (lambda^2/n) (1/N) Tr(U^T A^{-T} Lambda_P A^{-1} U Q_bar Psi_2 Q_bar^T) / denominator * ||Q_bar r||^2_{Psi_1}.
/// Throws ParameterError when some state is unvisited.
double delta_all_visited_closed_form(const TheoryInputs &in, const DeterministicEquivalent &de);

/// Delta of the true MSBE from the three-term bracket, evaluated in 113-bit
/// floating point starting from Phi_S, P, pi and A_hat. Near the interpolation
/// threshold the bracket cancels by many orders of magnitude, which double
/// precision cannot resolve; this is the reference for such checks. Slow (O(p^3)
/// software floating point).
double true_msbe_correction_extended(const TheoryInputs &in, const DeterministicEquivalent &de);

// Dense n x n materializations, for small problems and cross-checks.

/// B_n = K^T Phi_hat U_hat.
Eigen::MatrixXd dense_b_matrix(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited);

/// Solves [(N/m)(1/(1+delta)) B_n + lambda I] Q_bar = I.
Eigen::MatrixXd q_bar(const Eigen::MatrixXd &B_n, double delta, int N, int m, double lambda);

Eigen::MatrixXd dense_psi1(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited, double delta, int N);
Eigen::MatrixXd dense_psi2(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited, double delta, int N);

}  // namespace rflstd
