#pragma once

#include <stdexcept>
#include <string>

namespace vulnval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid target manifest. `field_path` names the offending key
/// using dotted notation (for example `hint.line_end`).
class ManifestError : public Error {
public:
    ManifestError(std::string field_path, const std::string& message)
        : Error(field_path.empty() ? message : field_path + ": " + message), field_path_(std::move(field_path)) {}

    const std::string& field_path() const noexcept { return field_path_; }

private:
    std::string field_path_;
};

/// Source tree access failed (missing file, binary file, path escaping the root).
class SourceError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

class CassetteMissError : public BackendError {
public:
    CassetteMissError(std::string role, int turn)
        : BackendError("cassette miss for (" + role + ", turn " + std::to_string(turn) + ")"),
          role_(std::move(role)), turn_(turn) {}

    const std::string& role() const noexcept { return role_; }
    int turn() const noexcept { return turn_; }

private:
    std::string role_;
    int turn_;
};

class TransportError : public BackendError {
public:
    using BackendError::BackendError;
};

class RemoteStatusError : public BackendError {
public:
    RemoteStatusError(int status, const std::string& body)
        : BackendError("remote returned HTTP " + std::to_string(status) + ": " + body.substr(0, 200)), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

/// Assistant output could not be parsed into a structured envelope.
class EnvelopeError : public Error {
public:
    using Error::Error;
};

/// A sandbox policy (tool or network allowlist) rejected the operation.
class PolicyError : public Error {
public:
    using Error::Error;
};

/// The execution environment is unusable (destroyed, workspace failure).
class EnvironmentError : public Error {
public:
    using Error::Error;
};

/// Connection refused, timeout or other transport failure on an HTTP exchange.
class NetworkError : public Error {
public:
    using Error::Error;
};

class TargetUnreachableError : public Error {
public:
    using Error::Error;
};

class TransitionError : public Error {
public:
    using Error::Error;
};

class PocError : public Error {
public:
    using Error::Error;
};

class PocPreconditionError : public PocError {
public:
    using PocError::PocError;
};

/// Generated report references steps that never happened in the source trace.
class PocConsistencyError : public PocError {
public:
    using PocError::PocError;
};

class MetricsError : public Error {
public:
    using Error::Error;
};

class HarnessError : public Error {
public:
    using Error::Error;
};

class TaxonomyError : public Error {
public:
    using Error::Error;
};

class FixtureError : public Error {
public:
    using Error::Error;
};

} // namespace vulnval
