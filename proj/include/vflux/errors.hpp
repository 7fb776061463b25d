#pragma once

#include <stdexcept>
#include <string>

namespace vflux {

// Error taxonomy shared across the toolkit. The CLI maps these onto exit codes.

/// Malformed or unreadable input file (bad header, missing sidecar, empty file).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid file whose payload is unusable (non-finite sample, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argument outside its documented domain.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input value set that is internally inconsistent (e.g. an infeasible record).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Degenerate input to a statistics routine (too few points, zero variance).
struct StatisticsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace vflux
