#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace regbridge {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Result not representable (e.g. an infinite quantile at s = 1).
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// Numerical procedure did not reach its tolerance.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved_tolerance)
        : std::runtime_error(what), achieved_tolerance_(achieved_tolerance) {}

    double achieved_tolerance() const noexcept { return achieved_tolerance_; }

private:
    double achieved_tolerance_;
};

/// Transition matrix rejected by chain validation.
class ChainError : public std::invalid_argument {
public:
    enum class Kind { NotSquare, NotStochastic, Reducible, Periodic, Singular };

    ChainError(Kind kind, std::vector<std::size_t> offending, const std::string& what,
               std::size_t period = 0)
        : std::invalid_argument(what), kind_(kind), offending_(std::move(offending)),
          period_(period) {}

    Kind kind() const noexcept { return kind_; }
    /// Zero-based rows (NotStochastic) or states (Reducible, Periodic).
    const std::vector<std::size_t>& offending() const noexcept { return offending_; }
    std::size_t period() const noexcept { return period_; }

private:
    Kind kind_;
    std::vector<std::size_t> offending_;
    std::size_t period_;
};

/// Model configuration violates an invariant (zero noise, n < 3, zero variance F, ...).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Regressors are all equal, so the slope estimator is undefined.
class DegenerateDesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// sigma_hat^2 = 0 (perfect fit), so the empirical bridge is undefined.
class DegenerateBridgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Kernel matrix needed more diagonal jitter than allowed to factorize.
class KernelNotPsdError : public std::runtime_error {
public:
    KernelNotPsdError(const std::string& what, double jitter_tried)
        : std::runtime_error(what), jitter_tried_(jitter_tried) {}

    double jitter_tried() const noexcept { return jitter_tried_; }

private:
    double jitter_tried_;
};

}  // namespace regbridge
