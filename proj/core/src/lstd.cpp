#include "rflstd/lstd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rflstd/errors.hpp"

namespace rflstd {

Eigen::VectorXd EmpiricalOperators::u_times(const Eigen::VectorXd &x) const {
    if (x.size() != n) throw ParameterError("u_times: expected a vector of length n");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < n; ++i) out(column_rows[i]) += x(i);
    return out / std::sqrt(static_cast<double>(n));
}

Eigen::VectorXd EmpiricalOperators::k_transpose_times(const Eigen::VectorXd &y) const {
    if (y.size() != m) throw ParameterError("k_transpose_times: expected a vector of length m");
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double value = y(column_rows[i]);
        if (next_column_rows[i] != kNoState) value -= discount * y(next_column_rows[i]);
        out(i) = value;
    }
    return out / std::sqrt(static_cast<double>(n));
}

Eigen::MatrixXd EmpiricalOperators::k_gram() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < n; ++i) {
        const int u = column_rows[i];
        const int v = next_column_rows[i];
        out(u, u) += 1.0;
        if (v != kNoState) {
            out(u, v) -= discount;
            out(v, u) -= discount;
            out(v, v) += discount * discount;
        }
    }
    return out / static_cast<double>(n);
}

Eigen::MatrixXd EmpiricalOperators::visited_states(const Eigen::MatrixXd &S) const {
    if (S.cols() != num_states) throw ParameterError("visited_states: state matrix has the wrong number of columns");
    Eigen::MatrixXd out(S.rows(), m);
    for (int j = 0; j < m; ++j) out.col(j) = S.col(visited_ids[j]);
    return out;
}

EmpiricalOperators build_operators(const TransitionDataset &ds, int num_states, double discount) {
    const int n = ds.size();
    if (n < 1) throw ParameterError("build_operators needs at least one transition");
    if (static_cast<int>(ds.next_state_ids.size()) != n) throw ParameterError("dataset id vectors differ in length");
    if (!(discount >= 0.0 && discount < 1.0)) throw ParameterError("discount must lie in [0, 1)");

    const auto check_id = [num_states](int id) {
        if (id < 0 || id >= num_states) throw ParameterError("state id " + std::to_string(id) + " out of range");
    };

    std::vector<int> ids;
    ids.reserve(2 * n);
    for (int i = 0; i < n; ++i) {
        check_id(ds.state_ids[i]);
        ids.push_back(ds.state_ids[i]);
        if (ds.next_state_ids[i] != kNoState) {
            check_id(ds.next_state_ids[i]);
            ids.push_back(ds.next_state_ids[i]);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    EmpiricalOperators ops;
    ops.n = n;
    ops.m = static_cast<int>(ids.size());
    ops.num_states = num_states;
    ops.discount = discount;
    ops.visited_ids = std::move(ids);

    std::vector<int> row_of(num_states, kNoState);
    for (int j = 0; j < ops.m; ++j) row_of[ops.visited_ids[j]] = j;

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    ops.column_rows.resize(n);
    ops.next_column_rows.resize(n);
    ops.counts = Eigen::VectorXi::Zero(ops.m);
    ops.next_counts = Eigen::VectorXi::Zero(ops.m);
    ops.U_hat = Eigen::MatrixXd::Zero(ops.m, n);
    ops.V_hat = Eigen::MatrixXd::Zero(ops.m, n);
    ops.U_full = Eigen::MatrixXd::Zero(num_states, n);
    ops.V_full = Eigen::MatrixXd::Zero(num_states, n);
    for (int i = 0; i < n; ++i) {
        const int u = row_of[ds.state_ids[i]];
        ops.column_rows[i] = u;
        ops.counts(u) += 1;
        ops.U_hat(u, i) = scale;
        ops.U_full(ds.state_ids[i], i) = scale;

        const int next_id = ds.next_state_ids[i];
        if (next_id == kNoState) {
            ops.next_column_rows[i] = kNoState;
            continue;
        }
        const int v = row_of[next_id];
        ops.next_column_rows[i] = v;
        ops.next_counts(v) += 1;
        ops.V_hat(v, i) = scale;
        ops.V_full(next_id, i) = scale;
    }

    // A_hat = U (U - gamma V)^T from counts: diag(c)/n - gamma c(i -> j)/n.
    ops.A_hat = Eigen::MatrixXd::Zero(ops.m, ops.m);
    for (int i = 0; i < n; ++i) {
        const int u = ops.column_rows[i];
        ops.A_hat(u, u) += 1.0;
        if (ops.next_column_rows[i] != kNoState) ops.A_hat(u, ops.next_column_rows[i]) -= discount;
    }
    ops.A_hat /= static_cast<double>(n);
    return ops;
}

SpectrumReport check_spectrum_assumption(const EmpiricalOperators &ops) {
    const Eigen::MatrixXd H = 0.5 * (ops.A_hat + ops.A_hat.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed on H(A_hat)");
    SpectrumReport report;
    report.xi_min = solver.eigenvalues().minCoeff();
    report.xi_max = solver.eigenvalues().maxCoeff();
    report.pd = report.xi_min > 0.0;
    report.count_condition = true;
    for (int j = 0; j < ops.m; ++j) {
        if (static_cast<double>(ops.counts(j)) < ops.discount * ops.next_counts(j)) report.count_condition = false;
    }
    return report;
}

TransitionDataset pathwise_adjustment(const TransitionDataset &ds) {
    if (ds.size() == 0) throw ParameterError("pathwise_adjustment needs a non-empty dataset");
    TransitionDataset out = ds;
    out.next_state_ids.back() = kNoState;
    out.X_next.col(out.X_next.cols() - 1).setZero();
    out.last_next_zeroed = true;
    return out;
}

LstdSolution lstd_fit(const EmpiricalOperators &ops, const FeatureMap &fm, const Eigen::MatrixXd &S_visited,
                      const Eigen::VectorXd &r, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("lstd_fit needs lambda > 0");
    if (r.size() != ops.n) throw ParameterError("reward vector length differs from n");
    if (S_visited.cols() != ops.m) throw ParameterError("S_visited must have m columns");

    const Eigen::MatrixXd Sigma_hat = fm.apply(S_visited);  // N x m
    const Eigen::MatrixXd G = Sigma_hat.transpose() * Sigma_hat;
    const double m = ops.m;

    Eigen::MatrixXd system = ops.A_hat * G / m;
    system.diagonal().array() += lambda;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    const double rcond = lu.rcond();
    const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(condition <= kMaxResolventCondition)) {
        throw NumericalError("resolvent system is ill-conditioned (condition estimate " + std::to_string(condition) +
                             ")");
    }

    const Eigen::VectorXd y = lu.solve(ops.u_times(r));  // U_hat Q_m r
    LstdSolution sol;
    sol.lambda = lambda;
    sol.condition_estimate = condition;
    sol.theta = Sigma_hat * y / (std::sqrt(static_cast<double>(ops.n)) * m);
    sol.scaled_resolvent_r = r - ops.k_transpose_times(G * y) / m;
    if (!sol.theta.allFinite()) throw NumericalError("lstd_fit produced non-finite parameters");
    return sol;
}

Eigen::MatrixXd next_state_features(const TransitionDataset &ds, const FeatureMap &fm) {
    Eigen::MatrixXd features = fm.apply(ds.X_next);
    if (ds.last_next_zeroed) features.col(features.cols() - 1).setZero();
    return features;
}

Eigen::VectorXd lstd_fit_feature_space(const TransitionDataset &ds, const FeatureMap &fm, int m, double discount,
                                       double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("lstd_fit_feature_space needs lambda > 0");
    const Eigen::MatrixXd Sx = fm.apply(ds.X);
    const Eigen::MatrixXd Sxn = next_state_features(ds, fm);
    const double n = ds.size();
    Eigen::MatrixXd system = Sx * (Sx - discount * Sxn).transpose();
    system.diagonal().array() += lambda * m * n;
    return system.partialPivLu().solve(Sx * ds.rewards);
}

Eigen::MatrixXd resolvent(const EmpiricalOperators &ops, const Eigen::MatrixXd &Sigma_hat, double lambda) {
    if (Sigma_hat.cols() != ops.m) throw ParameterError("resolvent: Sigma_hat must have m columns");
    Eigen::MatrixXd inverse = ops.K_hat().transpose() * (Sigma_hat.transpose() * Sigma_hat) * ops.U_hat / ops.m;
    inverse.diagonal().array() += lambda;
    return inverse.partialPivLu().inverse();
}

double empirical_msbe(const LstdSolution &sol, const TransitionDataset &ds, const FeatureMap &fm, double discount) {
    const Eigen::VectorXd residual = ds.rewards + discount * (next_state_features(ds, fm).transpose() * sol.theta) -
                                     fm.apply(ds.X).transpose() * sol.theta;
    const double n = ds.size();
    const double direct = residual.squaredNorm() / n;
    if (sol.scaled_resolvent_r.size() == ds.size()) {
        const double resolvent_form = sol.scaled_resolvent_r.squaredNorm() / n;
        const double tol = 1e-6 * std::max(direct, resolvent_form) + 1e-12 * ds.rewards.squaredNorm() / n;
        if (std::abs(direct - resolvent_form) > tol) {
            throw ConsistencyError("empirical MSBE forms disagree: " + std::to_string(direct) + " vs " +
                                   std::to_string(resolvent_form));
        }
    }
    return direct;
}

double true_msbe(const LstdSolution &sol, const MarkovRewardProcess &mrp, const FeatureMap &fm,
                 const StationaryDistribution &pi) {
    const Eigen::VectorXd values = fm.apply(mrp.states).transpose() * sol.theta;
    const Eigen::VectorXd residual = mrp.expected_rewards + mrp.discount * (mrp.transition * values) - values;
    return residual.dot(pi.pi.cwiseProduct(residual));
}

double msve(const LstdSolution &sol, const MarkovRewardProcess &mrp, const FeatureMap &fm,
            const StationaryDistribution &pi, const Eigen::VectorXd &V) {
    const Eigen::VectorXd error = V - fm.apply(mrp.states).transpose() * sol.theta;
    return error.dot(pi.pi.cwiseProduct(error));
}

}  // namespace rflstd
