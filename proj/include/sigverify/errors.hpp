#pragma once

#include <stdexcept>
#include <string>

namespace sigverify {

// Bad user input: malformed files, invalid arguments, impossible configs.
// The CLI maps these to exit code 1.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed signature file. Messages carry "<source>:<line>:" context.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Internal numeric failure (failed factorization, degenerate model).
// The CLI maps these to exit code 2.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg, int component_index = -1)
        : std::runtime_error(msg), component(component_index) {}
    int component;  // offending mixture component, -1 if not applicable
};

// A fit that cannot produce a usable model (e.g. every component pruned).
struct FitError : NumericError {
    using NumericError::NumericError;
};

}  // namespace sigverify
