#pragma once

#include <stdexcept>
#include <string>

namespace medpipe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File and stream problems: missing paths, malformed PGM/CSV payloads.
struct IoError : Error {
    using Error::Error;
};

// Bad configuration keys/values or incompatible command arguments.
struct ConfigError : Error {
    using Error::Error;
};

// Iterative solver failed to reach its tolerance.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& msg, double max_violation)
        : Error(msg), max_violation(max_violation) {}
    double max_violation = 0.0;
};

// Corrupt or incompatible model files.
struct ModelFormatError : Error {
    using Error::Error;
};

// Violated operation precondition (empty mask, non-positive sigma, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

}  // namespace medpipe
