#include "rflstd/delta.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "rflstd/errors.hpp"

namespace rflstd {

namespace {

constexpr double kImagResidueTol = 1e-8;
constexpr double kJitterStart = 1e-12;
constexpr double kJitterMax = 1e-4;

// Consecutive Picard steps shrinking by less than this factor count as stalling.
constexpr double kStallRatio = 0.999;
constexpr int kStallWindow = 200;

}  // namespace

BSpectrum b_spectrum(const Eigen::MatrixXd &A_hat, const Eigen::MatrixXd &phi_hat) {
    const auto m = A_hat.rows();
    if (A_hat.cols() != m || phi_hat.rows() != m || phi_hat.cols() != m) {
        throw ParameterError("b_spectrum: A_hat and phi_hat must both be m x m");
    }
    const Eigen::MatrixXd phi = 0.5 * (phi_hat + phi_hat.transpose());
    const double base = phi.trace() / static_cast<double>(m);

    BSpectrum out;
    Eigen::LLT<Eigen::MatrixXd> llt(phi);
    double jitter = 0.0;
    double factor = kJitterStart;
    while (llt.info() != Eigen::Success) {
        if (factor > kJitterMax) throw NumericalError("b_spectrum: Phi_hat is not positive semi-definite");
        jitter = factor * base;
        Eigen::MatrixXd shifted = phi;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        factor *= 10.0;
    }
    out.jitter = jitter;

    const Eigen::MatrixXd Z = llt.matrixL();
    const Eigen::MatrixXd compressed = Z.transpose() * A_hat * Z;
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(compressed, false);
    if (solver.info() != Eigen::Success) throw NumericalError("b_spectrum: eigensolver failed");
    out.eigenvalues = solver.eigenvalues();
    return out;
}

BSpectrum b_spectrum_dense(const Eigen::MatrixXd &B_n) {
    if (B_n.rows() != B_n.cols()) throw ParameterError("b_spectrum_dense: B_n must be square");
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(B_n, false);
    if (solver.info() != Eigen::Success) throw NumericalError("b_spectrum_dense: eigensolver failed");
    return {solver.eigenvalues(), 0.0};
}

double delta_map(const BSpectrum &spectrum, int N, int m, double lambda, double delta) {
    if (N < 1 || m < 1) throw ParameterError("delta_map needs N >= 1 and m >= 1");
    if (!(lambda > 0.0)) throw ParameterError("delta_map needs lambda > 0");
    const double scale = static_cast<double>(N) / m / (1.0 + delta);
    std::complex<double> sum = 0.0;
    double magnitude = 0.0;
    for (const auto &nu : spectrum.eigenvalues) {
        const std::complex<double> term = nu / (scale * nu + lambda);
        sum += term;
        magnitude += std::abs(term);
    }
    sum /= static_cast<double>(m);
    magnitude /= static_cast<double>(m);
    const double tol = kImagResidueTol * std::max(std::abs(delta), std::abs(sum.real())) + 1e-14 * magnitude;
    if (std::abs(sum.imag()) > tol) {
        throw NumericalError("delta_map: imaginary residue " + std::to_string(sum.imag()) + " is not negligible");
    }
    return sum.real();
}

DeltaResult delta_fixed_point(const BSpectrum &spectrum, int N, int m, double lambda, const DeltaOptions &options) {
    if (!(options.rtol > 0.0)) throw ParameterError("delta_fixed_point needs rtol > 0");
    if (!(options.initial >= 0.0)) throw ParameterError("delta_fixed_point needs a nonnegative start");

    int evaluations = 0;
    const auto f = [&](double x) {
        if (evaluations >= options.max_iter) {
            throw ConvergenceError("delta_fixed_point: exceeded " + std::to_string(options.max_iter) +
                                       " evaluations (last iterate " + std::to_string(x) + ")",
                                   x);
        }
        ++evaluations;
        const double value = delta_map(spectrum, N, m, lambda, x);
        if (value < 0.0) {
            throw AssumptionViolation("delta_fixed_point: negative iterate " + std::to_string(value) +
                                      " (symmetric part of A_hat not positive definite?)");
        }
        return value;
    };

    DeltaResult result;
    double x = options.initial;
    double previous_step = std::numeric_limits<double>::infinity();
    int stalled = 0;
    bool converged = false;
    while (evaluations < options.max_iter) {
        const double next = f(x);
        const double step = std::abs(next - x);
        if (step <= options.rtol * std::max(next, 1e-300)) {
            // Step test passed; confirm the remaining distance using the observed contraction.
            const double ratio = std::isfinite(previous_step) && previous_step > 0.0 ? step / previous_step : 0.0;
            const double remaining = ratio < 1.0 ? step * ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
            x = next;
            if (remaining <= options.rtol * std::max(next, 1e-300)) converged = true;
            break;
        }
        stalled = (step > kStallRatio * previous_step) ? stalled + 1 : 0;
        previous_step = step;
        x = next;
        if (stalled >= kStallWindow) break;
    }

    if (converged) {
        result.delta = x;
        result.evaluations = evaluations;
        result.residual = std::abs(f(x) - x);
        return result;
    }

    // Bisection on g(x) = f(x) - x, positive below the fixed point and negative above.
    const auto g = [&](double y) { return f(y) - y; };
    double lo = 0.0;
    double hi = 0.0;
    if (g(x) > 0.0) {
        lo = x;
        double width = std::max(x * options.rtol, 1e-300);
        hi = x + width;
        while (g(hi) > 0.0) {
            lo = hi;
            width *= 2.0;
            hi = x + width;
            if (!std::isfinite(hi)) throw ConvergenceError("delta_fixed_point: cannot bracket the fixed point", x);
        }
    } else {
        hi = x;
        double width = std::max(x * options.rtol, 1e-300);
        lo = std::max(0.0, x - width);
        while (lo > 0.0 && g(lo) <= 0.0) {
            hi = lo;
            width *= 2.0;
            lo = std::max(0.0, x - width);
        }
    }
    while (hi - lo > 0.25 * options.rtol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (g(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.delta = 0.5 * (lo + hi);
    result.bracketed = true;
    result.evaluations = evaluations;
    result.residual = std::abs(g(result.delta));
    return result;
}

DeltaResult delta_fixed_point(const Eigen::MatrixXd &B_n, int N, int m, double lambda, const DeltaOptions &options) {
    return delta_fixed_point(b_spectrum_dense(B_n), N, m, lambda, options);
}

}  // namespace rflstd
