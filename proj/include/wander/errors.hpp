#pragma once

#include <stdexcept>
#include <string>

namespace wander {

/// Base of every error raised by the engine. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched shapes: embedding dimensions, lineage arity.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Inputs outside an operation's domain (zero-norm vectors, empty pools).
class DomainError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Provider response that parsed as JSON but violated the wire schema. Never retried.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, int status, bool retryable)
        : Error(what), status_(status), retryable_(retryable) {}

    /// HTTP status, or 0 when no response arrived.
    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

class RunStoreError : public Error {
public:
    using Error::Error;
};

}  // namespace wander
