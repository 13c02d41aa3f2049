#ifndef OPRISK_ERRORS_HPP
#define OPRISK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace oprisk {

// Base of all engine errors. The category string is stable and machine
// readable; the CLI maps it to an exit status.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

// Invalid argument values (non-positive rates, out-of-range indices, ...).
class ParameterError : public Error {
public:
    explicit ParameterError(const std::string& message)
        : Error("parameter", message) {}
};

// Malformed or degenerate input data (files, databases).
class DataError : public Error {
public:
    explicit DataError(const std::string& message)
        : Error("data", message) {}
};

// An operation was called on a node of the wrong subgraph class.
class ClassificationError : public Error {
public:
    explicit ClassificationError(const std::string& message)
        : Error("classification", message) {}
};

// Exact enumeration would exceed the configured term budget.
class ResourceError : public Error {
public:
    explicit ResourceError(const std::string& message)
        : Error("resource", message) {}
};

// Not enough qualifying events in the database to form an estimate.
class InsufficientEventsError : public Error {
public:
    explicit InsufficientEventsError(const std::string& message)
        : Error("insufficient-events", message) {}
};

// The requested quantity is not defined for the given model (causal loops,
// non-exponential noise in the analytic solver, ...).
class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& message)
        : Error("unsupported", message) {}
};

} // namespace oprisk

#endif
