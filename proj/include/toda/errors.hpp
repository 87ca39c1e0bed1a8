#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace toda {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SizeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct DegenerateError : Error { using Error::Error; };
struct AccuracyError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Raised when the shifted polynomial loses real roots.
struct NotInAN : DomainError { using DomainError::DomainError; };

struct IntegrationError : Error {
    double t_reached;
    IntegrationError(const std::string& what, double t) : Error(what), t_reached(t) {}
};

struct TuningError : Error { using Error::Error; };

struct ConvergenceError : Error {
    std::vector<double> residuals;
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : Error(what), residuals(std::move(trace)) {}
};

}  // namespace toda
