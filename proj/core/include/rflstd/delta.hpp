#pragma once

#include <Eigen/Dense>

namespace rflstd {

/// Nonzero spectrum of B_n = (U_hat - gamma V_hat)^T Phi_hat U_hat.
///
/// Obtained from the m x m matrix Z^T A_hat Z with Phi_hat = Z Z^T (Cholesky),
/// which shares its nonzero eigenvalues with B_n. `jitter` is the diagonal
/// shift that had to be added to Phi_hat for the factorization to succeed.
struct BSpectrum {
    Eigen::VectorXcd eigenvalues;
    double jitter = 0.0;
};

BSpectrum b_spectrum(const Eigen::MatrixXd &A_hat, const Eigen::MatrixXd &phi_hat);

/// All eigenvalues of an explicit (n x n) B_n. Used for small problems and cross-checks.
BSpectrum b_spectrum_dense(const Eigen::MatrixXd &B_n);

/// f(delta) = (1/m) sum_j nu_j / ((N/m) nu_j / (1 + delta) + lambda), real part.
/// Throws NumericalError if the imaginary residue is not negligible.
double delta_map(const BSpectrum &spectrum, int N, int m, double lambda, double delta);

struct DeltaOptions {
    double rtol = 1e-10;
    int max_iter = 100000;
    double initial = 0.0;
};

struct DeltaResult {
    double delta = 0.0;
    int evaluations = 0;
    double residual = 0.0;   // |f(delta) - delta|
    bool bracketed = false;  // finished by the bracketing fallback
};

/// Positive fixed point delta = f(delta).
///
/// Picard iteration from `initial`. The map is a standard interference function,
/// so iterates move monotonically toward the unique fixed point; when they stall
/// (contraction factor near one, typical close to N = m with tiny lambda) the
/// solver switches to bisection on f(delta) - delta, whose sign changes exactly
/// once. Throws ConvergenceError when `max_iter` map evaluations are exhausted,
/// AssumptionViolation when the map turns negative.
DeltaResult delta_fixed_point(const BSpectrum &spectrum, int N, int m, double lambda, const DeltaOptions &options = {});

/// Convenience overload on an explicit B_n.
DeltaResult delta_fixed_point(const Eigen::MatrixXd &B_n, int N, int m, double lambda,
                              const DeltaOptions &options = {});

}  // namespace rflstd
