#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace covstream {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (window too short for the dependence order, bad ranges, mismatched H).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent data (dimension mismatch, non-finite entries).
class InputError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Quadrature, root finding or factorization did not produce a usable result,
/// or an estimated variance is not positive.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The training sample is too short for the requested trace estimate.
class InsufficientTrainingError : public Error {
public:
    InsufficientTrainingError(const std::string& what, int min_n0)
        : Error(what), min_n0_(min_n0) {}
    int min_n0() const noexcept { return min_n0_; }

private:
    int min_n0_;
};

/// No lag up to the configured maximum meets the dependence cutoff.
class DependenceTooStrongError : public Error {
public:
    using Error::Error;
};

/// The requested calibration target cannot be met (e.g. ARL <= H).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Operation attempted on a detector that has already raised an alarm.
class StateError : public Error {
public:
    using Error::Error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Replace the sink for non-fatal warnings. The default writes to stderr.
/// Pass an empty handler to silence warnings.
void set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace covstream
