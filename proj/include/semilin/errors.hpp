#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace semilin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class InvalidSupport : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Operation does not apply to the given input (e.g. no inner vacuum radius).
class Inapplicable : public Error {
public:
    using Error::Error;
};

class InsufficientRange : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    using Error::Error;
};

/// Step-size underflow in the integrator. Carries the last accepted state.
class IntegrationFailure : public Error {
public:
    IntegrationFailure(const std::string& what, double t, std::vector<double> state)
        : Error(what), last_t_(t), last_state_(std::move(state)) {}

    double last_t() const noexcept { return last_t_; }
    const std::vector<double>& last_state() const noexcept { return last_state_; }

private:
    double last_t_;
    std::vector<double> last_state_;
};

/// Quadrature did not reach the requested tolerance.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double estimate, double error_estimate)
        : Error(what), estimate_(estimate), error_estimate_(error_estimate) {}

    double estimate() const noexcept { return estimate_; }
    double error_estimate() const noexcept { return error_estimate_; }

private:
    double estimate_;
    double error_estimate_;
};

}  // namespace semilin
