#pragma once

#include <stdexcept>
#include <string>

namespace lcgf {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Inconsistent or unsupported configuration (box sides, grids, config files).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Factorization or solve failure, negative variances, and similar.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problem too large for a dense route.
struct SizeError : std::length_error {
    using std::length_error::length_error;
};

// Hypotheses of a comparison inequality do not hold for the given instance.
struct PreconditionError : DomainError {
    using DomainError::DomainError;
};

}  // namespace lcgf
