#pragma once

#include <stdexcept>

namespace hkl {

// Malformed input (files, dimensions, arguments).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Mathematical precondition not met (t <= 0, Re R < 0, degenerate maximum, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A numerical procedure did not converge within its budget.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hkl
