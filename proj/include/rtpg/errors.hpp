// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace rtpg {

/// A scenario or operation argument violates its documented precondition.
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The equilibrium linear system could not be solved to tolerance.
struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical invariant (e.g. covariance positive semidefiniteness) was
/// violated beyond the accepted tolerance.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inconsistent run configuration (CLI / config file level).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rtpg
