#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace condexp {

/// Thrown when arguments violate a structural precondition (size mismatch,
/// invalid partition, operators over different measures, ...).
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by the file and expression parsers; the message names the
/// offending field or index.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input was well-formed but fails the hypothesis of the check that was
/// asked for (non-convex sequence, constant c too small, ...).
class PreconditionError : public std::domain_error {
public:
    PreconditionError(const std::string& what, std::size_t index)
        : std::domain_error(what), index_(index)
    {
    }

    /// Position the diagnostic refers to.
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

} // namespace condexp
