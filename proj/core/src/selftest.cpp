#include "rflstd/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "rflstd/delta.hpp"
#include "rflstd/features.hpp"
#include "rflstd/lstd.hpp"
#include "rflstd/mrp.hpp"
#include "rflstd/theory.hpp"

namespace rflstd {

namespace {

double relative(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

std::string sci(double x) {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << x;
    return out.str();
}

SelftestCheck push_through() {
    const auto mrp = synthetic_ergodic_mrp(12, 5, 0.9, 3);
    const auto ds = sample_path(mrp, 40, 4);
    const auto ops = build_operators(ds, mrp.num_states(), mrp.discount);
    const FeatureMap fm(15, 5, Activation{ActivationKind::ReLU}, 5);
    const auto sol = lstd_fit(ops, fm, ops.visited_states(mrp.states), ds.rewards, 1e-3);
    const auto theta = lstd_fit_feature_space(ds, fm, ops.m, mrp.discount, 1e-3);
    const double err = relative(sol.theta, theta);
    return {"push-through identity", err <= 1e-8, "relative error " + sci(err)};
}

SelftestCheck two_form_msbe() {
    const auto mrp = synthetic_ergodic_mrp(10, 4, 0.9, 7);
    const auto ds = sample_path(mrp, 30, 8);
    const auto ops = build_operators(ds, mrp.num_states(), mrp.discount);
    const FeatureMap fm(8, 4, Activation{ActivationKind::ReLU}, 9);
    const auto sol = lstd_fit(ops, fm, ops.visited_states(mrp.states), ds.rewards, 1e-2);
    const Eigen::VectorXd residual = ds.rewards + mrp.discount * (next_state_features(ds, fm).transpose() * sol.theta) -
                                     fm.apply(ds.X).transpose() * sol.theta;
    const double err = relative(sol.scaled_resolvent_r, residual);
    return {"empirical MSBE two forms", err <= 1e-8, "relative error " + sci(err)};
}

SelftestCheck ridge_reduction() {
    const auto mrp = synthetic_ergodic_mrp(10, 4, 0.0, 11);
    const auto ds = sample_path(mrp, 25, 12);
    const auto ops = build_operators(ds, mrp.num_states(), 0.0);
    const FeatureMap fm(9, 4, Activation{ActivationKind::ReLU}, 13);
    const double lambda = 1e-2;
    const auto sol = lstd_fit(ops, fm, ops.visited_states(mrp.states), ds.rewards, lambda);
    const Eigen::MatrixXd Sx = fm.apply(ds.X);
    Eigen::MatrixXd normal = Sx * Sx.transpose();
    normal.diagonal().array() += lambda * ops.m * ops.n;
    const Eigen::VectorXd ridge = normal.ldlt().solve(Sx * ds.rewards);
    const double err = relative(sol.theta, ridge);
    return {"ridge reduction at gamma = 0", err <= 1e-8, "relative error " + sci(err)};
}

SelftestCheck kernel_monte_carlo() {
    int worst_index = -1;
    double worst = 0.0;
    const Activation acts[] = {{ActivationKind::Linear}, {ActivationKind::ReLU}, {ActivationKind::Abs},
                               {ActivationKind::Sign}};
    const auto mrp = synthetic_ergodic_mrp(8, 6, 0.5, 17);
    for (int i = 0; i < 8; ++i) {
        const Eigen::VectorXd a = mrp.states.col(i);
        const Eigen::VectorXd b = mrp.states.col((i + 3) % 8);
        const Activation act = acts[i % 4];
        const auto mc = phi_monte_carlo(a, b, act, 20000, 100 + i);
        const double z = std::abs(phi_closed_form(a, b, act) - mc.mean) / mc.std_error;
        if (z > worst) {
            worst = z;
            worst_index = i;
        }
    }
    return {"kernel closed form vs Monte Carlo", worst <= 5.0,
            "largest z-score " + sci(worst) + " (pair " + std::to_string(worst_index) + ")"};
}

SelftestCheck all_visited_pd() {
    const auto mrp = synthetic_ergodic_mrp(6, 3, 0.99, 19);
    const auto ds = sample_path(mrp, 400, 20);
    const auto ops = build_operators(ds, mrp.num_states(), mrp.discount);
    const auto report = check_spectrum_assumption(ops);
    const bool all = ops.m == mrp.num_states();
    return {"H(A_hat) positive definite with every state visited", all && report.pd,
            "m = " + std::to_string(ops.m) + ", xi_min = " + sci(report.xi_min)};
}

SelftestCheck pathwise() {
    const auto mrp = synthetic_ergodic_mrp(15, 3, 0.99, 23);
    int failures = 0;
    for (int k = 0; k < 20; ++k) {
        const auto ds = pathwise_adjustment(sample_path(mrp, 10 + 3 * k, 200 + k));
        const auto report = check_spectrum_assumption(build_operators(ds, mrp.num_states(), mrp.discount));
        if (!report.count_condition) ++failures;
    }
    return {"pathwise adjustment restores the count condition", failures == 0,
            std::to_string(failures) + " of 20 paths violate it"};
}

SelftestCheck scalar_delta() {
    const double phi = 0.7;
    const double lambda = 0.05;
    const int N = 3;
    BSpectrum spectrum;
    spectrum.eigenvalues = Eigen::VectorXcd::Constant(1, phi);
    const auto result = delta_fixed_point(spectrum, N, 1, lambda);
    const double b = N * phi + lambda - phi;
    const double root = (-b + std::sqrt(b * b + 4.0 * lambda * phi)) / (2.0 * lambda);
    const double err = std::abs(result.delta - root) / root;
    return {"scalar delta oracle", err <= 1e-10, "relative error " + sci(err)};
}

SelftestCheck q_bar_residual() {
    const auto mrp = synthetic_ergodic_mrp(10, 4, 0.9, 29);
    const auto ds = sample_path(mrp, 20, 30);
    const auto ops = build_operators(ds, mrp.num_states(), mrp.discount);
    const Eigen::MatrixXd phi = phi_gram(ops.visited_states(mrp.states), Activation{ActivationKind::ReLU});
    const Eigen::MatrixXd B = dense_b_matrix(ops, phi);
    const int N = 2 * ops.m;
    const double lambda = 1e-2;
    const double delta = delta_fixed_point(b_spectrum(ops.A_hat, phi), N, ops.m, lambda).delta;
    const Eigen::MatrixXd Q = q_bar(B, delta, N, ops.m, lambda);
    Eigen::MatrixXd system = static_cast<double>(N) / ops.m / (1.0 + delta) * B;
    system.diagonal().array() += lambda;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(ops.n, ops.n);
    const double err = (Q * system - I).norm() / I.norm();
    return {"deterministic resolvent defining equation", err <= 1e-8, "relative residual " + sci(err)};
}

}  // namespace

std::vector<SelftestCheck> run_selftest() {
    const std::vector<std::pair<std::string, std::function<SelftestCheck()>>> checks = {
        {"push-through", push_through},
        {"two-form MSBE", two_form_msbe},
        {"ridge reduction", ridge_reduction},
        {"kernel Monte Carlo", kernel_monte_carlo},
        {"all-visited PD", all_visited_pd},
        {"pathwise adjustment", pathwise},
        {"scalar delta", scalar_delta},
        {"deterministic resolvent", q_bar_residual},
    };
    std::vector<SelftestCheck> out;
    for (const auto &[name, check] : checks) {
        try {
            out.push_back(check());
        } catch (const std::exception &e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

}  // namespace rflstd
