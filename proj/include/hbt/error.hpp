#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace hbt {

/// Base error carrying a module-qualified code such as "sources.precision".
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    DomainError(const std::string& module, const std::string& message)
        : Error(module + ".domain", message) {}
};

/// Quadrature could not reach its precision contract.
class PrecisionError : public Error {
public:
    PrecisionError(const std::string& module, const std::string& message)
        : Error(module + ".precision", message) {}
};

/// Linear-algebra failure (non-PSD covariance and similar).
class NumericalError : public Error {
public:
    NumericalError(const std::string& module, const std::string& message)
        : Error(module + ".numerical", message) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& kind, const std::string& message)
        : Error("config." + kind, message) {}
};

class EstimateError : public Error {
public:
    explicit EstimateError(const std::string& message)
        : Error("analysis.estimate", message) {}
};

class FitError : public Error {
public:
    FitError(const std::string& kind, const std::string& message)
        : Error("analysis." + kind, message) {}
};

}  // namespace hbt
