#pragma once

#include <stdexcept>

namespace brox {

// Raised for rejected parameters (non-positive steps, invalid thresholds, ...).
struct InvalidConfig : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised when an argument lies outside the domain an operation is defined on.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Raised when a requested time or level lies beyond what a realization can reach.
struct HorizonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace brox
