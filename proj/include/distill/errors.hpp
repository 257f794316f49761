#pragma once

#include <stdexcept>
#include <string>

namespace distill {

// Bad user-supplied configuration: schemas, merge tables, incompatible
// objective/pipeline pairings. CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A documented precondition of an operation was violated by the caller.
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Request exceeds a hard resource bound (e.g. enumeration length).
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// The two tokenizations cannot be aligned (different bytes or content regions).
class AlignmentError : public std::runtime_error {
public:
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss or gradient encountered during training. CLI maps this
// to exit code 2.
class NumericalAbort : public std::runtime_error {
public:
    explicit NumericalAbort(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace distill
