#pragma once

#include <stdexcept>
#include <string>

namespace rflstd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid dimensions, out-of-range scalars, malformed inputs.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A linear solve, eigensolve or iteration could not produce a trustworthy result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration ran out of budget.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string &what, double last_residual)
        : NumericalError(what), last_residual_(last_residual) {}

    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// A modeling assumption (positive-definite symmetric part, positive denominators) is violated.
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

/// Two algebraically equal evaluations disagree beyond tolerance.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Configuration file or command-line problems.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rflstd
