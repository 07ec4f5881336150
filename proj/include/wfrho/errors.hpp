#pragma once

#include <stdexcept>
#include <string>

namespace wfrho {

// Bad input data: a precondition on user-supplied values does not hold.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A trajectory or field was queried outside the time range it covers.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numerical solver had to give up (speed guard, light-cone root, near-field hit).
struct SolverAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Initial fields do not satisfy the Maxwell constraints for the given charges.
struct ConstraintViolation : SolverAbort {
    using SolverAbort::SolverAbort;
};

}  // namespace wfrho
