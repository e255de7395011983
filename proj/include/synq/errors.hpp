#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace synq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a transform or exponent.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Steady-state quantities requested for a model with E Y_n(1) >= 0.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// Malformed model file or simulation configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operation not defined for this model class (e.g. priority oracle on a
/// diffusive model).
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// Failures of numerical procedures (root bracketing, pole proximity, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

class NearPole : public NumericError {
public:
    NearPole(const std::string& where, double denominator)
        : NumericError("near pole in " + where + " (denominator " + format(denominator) + ")"),
          denominator_(denominator) {}

    double denominator() const noexcept { return denominator_; }

private:
    static std::string format(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", x);
        return buf;
    }
    double denominator_;
};

class BracketOverflow : public NumericError {
public:
    using NumericError::NumericError;
};

class InfiniteMean : public NumericError {
public:
    using NumericError::NumericError;
};

enum class ViolationKind {
    NotSpectrallyOneSided,
    SubordinatorFirstCoordinate,
    ZeroSubordinator,
    NegativeSubordinatorDrift,
    InvalidParameter,
    DimensionMismatch,
};

const char* to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    int coordinate = 0;  // 1-based; 0 when not tied to a coordinate
    std::string detail;
};

/// Raised by validate(); carries every violated structural assumption.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);

    const std::vector<Violation>& violations() const noexcept { return violations_; }
    bool has(ViolationKind kind) const noexcept;

private:
    std::vector<Violation> violations_;
};

}  // namespace synq
