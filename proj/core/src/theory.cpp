#include "rflstd/theory.hpp"

#include <cmath>
#include <string>

#include "rflstd/errors.hpp"

namespace rflstd {

namespace {

double correction_scale(int N, int m, double delta) { return static_cast<double>(N) / m / (1.0 + delta); }

// Tr(X Y) for symmetric Y.
double trace_with_symmetric(const Eigen::MatrixXd &X, const Eigen::MatrixXd &Y) { return X.cwiseProduct(Y).sum(); }

Eigen::MatrixXd invert_checked(const Eigen::MatrixXd &A, const char *what) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || 1.0 / rcond > kMaxResolventCondition) {
        throw NumericalError(std::string(what) + " is singular or ill-conditioned (rcond " + std::to_string(rcond) +
                             ")");
    }
    return lu.inverse();
}

double bracket_trace(const TheoryInputs &in, const DeterministicEquivalent &de, const Eigen::MatrixXd &f_w_f,
                     double trace_w_phi) {
    const double c = de.scale;
    const Eigen::MatrixXd m_phi_mt = de.M * in.phi_visited * de.M.transpose();
    const double quadratic = trace_with_symmetric(m_phi_mt, f_w_f);
    const double cross = trace_with_symmetric(de.M, f_w_f);
    return c * c * c * quadratic - 2.0 * c * c * cross + c * trace_w_phi;
}

Eigen::VectorXd deterministic_values(const TheoryInputs &in, const DeterministicEquivalent &de) {
    return de.scale / std::sqrt(static_cast<double>(in.n())) * (in.phi_cross * de.a);
}

double weighted_norm(const Eigen::VectorXd &v, const Eigen::VectorXd &w) { return v.dot(w.cwiseProduct(v)); }

}  // namespace

TheoryInputs prepare_theory(const EmpiricalOperators &ops, const MarkovRewardProcess &mrp,
                            const StationaryDistribution &pi, Activation activation, const Eigen::VectorXd &r) {
    if (r.size() != ops.n) throw ParameterError("prepare_theory: reward vector length differs from n");
    if (mrp.num_states() != ops.num_states) throw ParameterError("prepare_theory: MRP and operators disagree on |S|");
    const int p = mrp.num_states();
    const int m = ops.m;

    TheoryInputs in;
    in.ops = ops;
    in.r = r;
    in.phi_states = phi_gram(mrp.states, activation);
    in.phi_cross.resize(p, m);
    for (int j = 0; j < m; ++j) in.phi_cross.col(j) = in.phi_states.col(ops.visited_ids[j]);
    in.phi_visited.resize(m, m);
    for (int i = 0; i < m; ++i) in.phi_visited.row(i) = in.phi_cross.row(ops.visited_ids[i]);
    in.k_gram = ops.k_gram();
    in.u_r = ops.u_times(r);

    in.transition = mrp.transition;
    in.pi = pi.pi;
    in.expected_rewards = mrp.expected_rewards;
    in.values = value_function(mrp);
    const Eigen::MatrixXd I_minus_gP = Eigen::MatrixXd::Identity(p, p) - mrp.discount * mrp.transition;
    in.lambda_p = I_minus_gP.transpose() * pi.pi.asDiagonal() * I_minus_gP;
    in.lambda_p = 0.5 * (in.lambda_p + in.lambda_p.transpose());

    in.f_lambda_f = in.phi_cross.transpose() * in.lambda_p * in.phi_cross;
    in.f_lambda_f = 0.5 * (in.f_lambda_f + in.f_lambda_f.transpose());
    in.f_dpi_f = in.phi_cross.transpose() * pi.pi.asDiagonal() * in.phi_cross;
    in.f_dpi_f = 0.5 * (in.f_dpi_f + in.f_dpi_f.transpose());
    in.trace_lambda_phi = trace_with_symmetric(in.lambda_p, in.phi_states);
    in.trace_dpi_phi = pi.pi.dot(in.phi_states.diagonal());

    in.spectrum = b_spectrum(ops.A_hat, in.phi_visited);
    return in;
}

DeterministicEquivalent deterministic_equivalent(const TheoryInputs &in, int N, double lambda,
                                                 const DeltaOptions &options) {
    if (N < 1) throw ParameterError("deterministic_equivalent needs N >= 1");
    if (!(lambda > 0.0)) throw ParameterError("deterministic_equivalent needs lambda > 0");
    const int m = in.m();

    DeterministicEquivalent de;
    de.N = N;
    de.lambda = lambda;
    de.ratio = static_cast<double>(N) / m;
    de.solve = delta_fixed_point(in.spectrum, N, m, lambda, options);
    de.delta = de.solve.delta;
    de.scale = correction_scale(N, m, de.delta);
    const double c = de.scale;

    Eigen::MatrixXd right = c * in.phi_visited * in.ops.A_hat;
    right.diagonal().array() += lambda;
    de.T = invert_checked(right, "deterministic resolvent");
    Eigen::MatrixXd left = c * in.ops.A_hat * in.phi_visited;
    left.diagonal().array() += lambda;
    de.T_left = invert_checked(left, "deterministic resolvent");

    de.M = in.ops.A_hat * de.T;
    de.a = de.T_left * in.u_r;
    de.lambda_q_r = in.r - c * in.ops.k_transpose_times(de.T * (in.phi_visited * in.u_r));
    de.psi1_norm = c * de.a.dot(in.phi_visited * de.a);

    const double interaction = c * c * (de.M * in.phi_visited).cwiseProduct(in.phi_visited * de.M).sum();
    de.denominator = 1.0 - interaction / N;
    if (!(de.denominator > 0.0)) {
        throw AssumptionViolation("correction denominator is not positive: 1 - Tr(Psi2 Qbar^T Psi1 Qbar)/N = " +
                                  std::to_string(de.denominator));
    }
    return de;
}

TheoryValue theoretical_empirical_msbe(const TheoryInputs &in, const DeterministicEquivalent &de) {
    const double n = in.n();
    const Eigen::MatrixXd L = de.lambda * de.T;
    const double numerator = de.scale * trace_with_symmetric(L * in.phi_visited * L.transpose(), in.k_gram);
    TheoryValue out;
    out.main = de.lambda_q_r.squaredNorm() / n;
    out.correction = numerator / de.N / de.denominator * de.psi1_norm / n;
    out.value = out.main + out.correction;
    return out;
}

TheoryValue theoretical_true_msbe(const TheoryInputs &in, const DeterministicEquivalent &de) {
    const Eigen::VectorXd u = deterministic_values(in, de);
    const Eigen::VectorXd residual = in.expected_rewards + in.ops.discount * (in.transition * u) - u;
    TheoryValue out;
    out.main = weighted_norm(residual, in.pi);
    out.correction = bracket_trace(in, de, in.f_lambda_f, in.trace_lambda_phi) / de.N / de.denominator *
                     de.psi1_norm / in.n();
    out.value = out.main + out.correction;
    return out;
}

TheoryValue theoretical_msve(const TheoryInputs &in, const DeterministicEquivalent &de) {
    const Eigen::VectorXd error = in.values - deterministic_values(in, de);
    TheoryValue out;
    out.main = weighted_norm(error, in.pi);
    out.correction =
        bracket_trace(in, de, in.f_dpi_f, in.trace_dpi_phi) / de.N / de.denominator * de.psi1_norm / in.n();
    out.value = out.main + out.correction;
    return out;
}

double delta_all_visited_closed_form(const TheoryInputs &in, const DeterministicEquivalent &de) {
    if (in.m() != in.p()) {
        throw ParameterError("closed-form Delta needs every state visited (m = " + std::to_string(in.m()) +
                             ", |S| = " + std::to_string(in.p()) + ")");
    }
    // U_hat Q_bar Psi_2 Q_bar^T U_hat^T = c M Phi_hat M^T; A_hat^{-1} M is then sandwiched by Lambda_P.
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(in.ops.A_hat);
    const Eigen::MatrixXd W = de.lambda * lu.solve(de.M);
    const double numerator = de.scale * trace_with_symmetric(W * in.phi_visited * W.transpose(), in.lambda_p);
    return numerator / de.N / de.denominator * de.psi1_norm / in.n();
}

Eigen::MatrixXd dense_b_matrix(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited) {
    return ops.K_hat().transpose() * phi_visited * ops.U_hat;
}

Eigen::MatrixXd q_bar(const Eigen::MatrixXd &B_n, double delta, int N, int m, double lambda) {
    Eigen::MatrixXd system = correction_scale(N, m, delta) * B_n;
    system.diagonal().array() += lambda;
    return invert_checked(system, "q_bar");
}

Eigen::MatrixXd dense_psi1(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited, double delta, int N) {
    return correction_scale(N, ops.m, delta) * ops.U_hat.transpose() * phi_visited * ops.U_hat;
}

Eigen::MatrixXd dense_psi2(const EmpiricalOperators &ops, const Eigen::MatrixXd &phi_visited, double delta, int N) {
    const Eigen::MatrixXd K = ops.K_hat();
    return correction_scale(N, ops.m, delta) * K.transpose() * phi_visited * K;
}

}  // namespace rflstd
