#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rflstd/delta.hpp"
#include "rflstd/errors.hpp"
#include "rflstd/lstd.hpp"
#include "rflstd/theory.hpp"

using namespace rflstd;

namespace {

BSpectrum constant_spectrum(int m, double nu) {
    BSpectrum s;
    s.eigenvalues = Eigen::VectorXcd::Constant(m, std::complex<double>(nu, 0.0));
    return s;
}

/// Root of lambda x^2 + (c nu + lambda - nu) x - nu = 0 with c = N/m: the fixed point when every eigenvalue equals nu.
double scalar_fixed_point(double nu, int N, int m, double lambda) {
    const double c = static_cast<double>(N) / m;
    const double b = c * nu + lambda - nu;
    const double root = std::sqrt(b * b + 4.0 * lambda * nu);
    return b >= 0.0 ? 2.0 * nu / (b + root) : (root - b) / (2.0 * lambda);
}

struct Problem {
    EmpiricalOperators ops;
    Eigen::MatrixXd phi_hat;
    BSpectrum spectrum;
    Eigen::MatrixXd B;
};

Problem random_problem(int p, int n, std::uint64_t seed) {
    const auto mrp = synthetic_ergodic_mrp(p, 5, 0.9, seed);
    const auto ds = pathwise_adjustment(sample_path(mrp, n, seed + 7));
    Problem pr;
    pr.ops = build_operators(ds, p, 0.9);
    pr.phi_hat = phi_gram(pr.ops.visited_states(mrp.states), Activation{ActivationKind::ReLU});
    pr.spectrum = b_spectrum(pr.ops.A_hat, pr.phi_hat);
    pr.B = dense_b_matrix(pr.ops, pr.phi_hat);
    return pr;
}

}  // namespace

TEST(DeltaSolver, ScalarQuadraticOracle) {
    for (const double nu : {0.1, 1.0, 7.5}) {
        for (const int N : {1, 5, 40}) {
            for (const double lambda : {1e-6, 1e-2, 3.0}) {
                const auto res = delta_fixed_point(constant_spectrum(10, nu), N, 10, lambda);
                const double expected = scalar_fixed_point(nu, N, 10, lambda);
                EXPECT_LE(oracle::rel(res.delta, expected), 1e-9) << nu << " " << N << " " << lambda;
                EXPECT_LE(res.residual, 1e-9 * expected);
            }
        }
    }
}

TEST(DeltaSolver, HugeLambdaGivesTinyDelta) {
    const auto pr = random_problem(20, 60, 1);
    EXPECT_LT(delta_fixed_point(pr.spectrum, 10, pr.ops.m, 1e12).delta, 1e-9);
}

TEST(DeltaSolver, DecreasesInFeatureCountAndLambda) {
    const auto pr = random_problem(25, 80, 2);
    const int m = pr.ops.m;
    const std::array<int, 5> Ns{m / 4 + 1, m / 2, m, 2 * m, 5 * m};
    const std::array<double, 5> lambdas{1e-6, 1e-4, 1e-2, 1.0, 10.0};
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            const double here = delta_fixed_point(pr.spectrum, Ns[i], m, lambdas[j]).delta;
            EXPECT_GT(here, 0.0);
            if (i + 1 < Ns.size()) EXPECT_GE(here, delta_fixed_point(pr.spectrum, Ns[i + 1], m, lambdas[j]).delta);
            if (j + 1 < lambdas.size()) EXPECT_GE(here, delta_fixed_point(pr.spectrum, Ns[i], m, lambdas[j + 1]).delta);
        }
    }
}

TEST(DeltaSolver, StartingPointDoesNotMatter) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto pr = random_problem(15, 50, seed);
        for (const double ratio : {0.5, 1.0, 2.0}) {
            const int N = std::max(1, static_cast<int>(std::lround(ratio * pr.ops.m)));
            DeltaOptions from_zero;
            DeltaOptions from_large;
            from_large.initial = 1e6;
            const double a = delta_fixed_point(pr.spectrum, N, pr.ops.m, 1e-5, from_zero).delta;
            const double b = delta_fixed_point(pr.spectrum, N, pr.ops.m, 1e-5, from_large).delta;
            EXPECT_LE(oracle::rel(a, b), 1e-8);
        }
    }
}

TEST(DeltaSolver, CompressedSpectrumMatchesDenseMatrix) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto pr = random_problem(12, 40, seed + 20);
        const int m = pr.ops.m;
        for (const int N : {m / 2 + 1, m, 3 * m}) {
            const double compressed = delta_fixed_point(pr.spectrum, N, m, 1e-3).delta;
            const double dense = delta_fixed_point(pr.B, N, m, 1e-3).delta;
            const double bisection = oracle::delta_bisection(pr.B, N, m, 1e-3);
            EXPECT_LE(oracle::rel(compressed, dense), 1e-8);
            EXPECT_LE(oracle::rel(compressed, bisection), 1e-8);
        }
    }
}

TEST(DeltaSolver, NearCriticalRatioStillConverges) {
    const auto pr = random_problem(30, 200, 5);
    const int m = pr.ops.m;
    const auto res = delta_fixed_point(pr.spectrum, m, m, 1e-9);
    EXPECT_LE(oracle::rel(res.delta, oracle::delta_bisection(pr.B, m, m, 1e-9)), 1e-7);
    EXPECT_LE(res.residual, 1e-8 * res.delta);
}

TEST(DeltaSolver, BudgetExhaustionThrows) {
    const auto pr = random_problem(15, 50, 3);
    DeltaOptions opts;
    opts.max_iter = 2;
    try {
        delta_fixed_point(pr.spectrum, pr.ops.m, pr.ops.m, 1e-6, opts);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError &e) {
        EXPECT_TRUE(std::isfinite(e.last_residual()));
    }
}

TEST(DeltaSolver, NegativeMapIsAnAssumptionViolation) {
    EXPECT_THROW(delta_fixed_point(constant_spectrum(1, -1e-3), 1, 1, 1.0), AssumptionViolation);
}

TEST(DeltaSolver, RejectsBadArguments) {
    const auto s = constant_spectrum(3, 1.0);
    EXPECT_THROW(delta_fixed_point(s, 0, 3, 1.0), ParameterError);
    EXPECT_THROW(delta_fixed_point(s, 3, 3, 0.0), ParameterError);
    DeltaOptions opts;
    opts.initial = -1.0;
    EXPECT_THROW(delta_fixed_point(s, 3, 3, 1.0, opts), ParameterError);
}

TEST(DeltaMap, NonNegligibleImaginaryPartIsReported) {
    BSpectrum s;
    s.eigenvalues = Eigen::VectorXcd(1);
    s.eigenvalues(0) = std::complex<double>(1.0, 1.0);
    EXPECT_THROW(delta_map(s, 1, 1, 1.0, 0.0), NumericalError);
}

TEST(DeltaMap, ConjugatePairsCancel) {
    BSpectrum s;
    s.eigenvalues = Eigen::VectorXcd(2);
    s.eigenvalues(0) = std::complex<double>(1.0, 0.5);
    s.eigenvalues(1) = std::complex<double>(1.0, -0.5);
    EXPECT_NO_THROW(delta_map(s, 2, 2, 0.1, 0.3));
}

TEST(BSpectrum, SharesNonzeroEigenvaluesWithDenseMatrix) {
    const auto pr = random_problem(10, 40, 9);
    const Eigen::VectorXcd dense = Eigen::EigenSolver<Eigen::MatrixXd>(pr.B, false).eigenvalues();
    for (const auto &nu : pr.spectrum.eigenvalues) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto &mu : dense) best = std::min(best, std::abs(nu - mu));
        EXPECT_LE(best, 1e-8 * (1.0 + std::abs(nu)));
    }
    EXPECT_EQ(pr.spectrum.jitter, 0.0);
}

TEST(BSpectrum, SingularGramIsJittered) {
    const auto pr = random_problem(10, 40, 10);
    Eigen::MatrixXd low_rank = pr.phi_hat;
    low_rank.col(0).setZero();
    low_rank.row(0).setZero();
    const auto s = b_spectrum(pr.ops.A_hat, low_rank);
    EXPECT_GT(s.jitter, 0.0);
    EXPECT_EQ(s.eigenvalues.size(), pr.ops.m);
}
