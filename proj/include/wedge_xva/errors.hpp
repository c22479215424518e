#pragma once

#include <stdexcept>
#include <string>

namespace wxva {

// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Correlation triplet whose 3x3 matrix is not positive definite.
class CorrelationError : public DomainError {
public:
    using DomainError::DomainError;
};

// Iteration, quadrature or truncation that failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CalibrationError : public NumericalError {
public:
    CalibrationError(const std::string& what, double lo, double hi)
        : NumericalError(what + " (bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "])"),
          lo_(lo), hi_(hi) {}

    double bracket_lo() const { return lo_; }
    double bracket_hi() const { return hi_; }

private:
    double lo_;
    double hi_;
};

class MeshQualityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// File-level failures: unreadable, corrupt or unwritable artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CacheIntegrityError : public IoError {
public:
    using IoError::IoError;
};

} // namespace wxva
