#pragma once

#include <stdexcept>
#include <string>

namespace dronepower {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An input value violates a documented precondition (non-finite, out of range).
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

/// A physical configuration makes the requested quantity undefined
/// (e.g. zero total rotor disk area).
class SingularConfigError : public Error {
public:
    using Error::Error;
};

/// A numeric procedure failed to converge or produced a non-finite value.
class NumericError : public Error {
public:
    NumericError(const std::string& msg, double residual = 0.0)
        : Error(msg), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Structural problem in an input document: missing column, unknown key,
/// malformed header.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Malformed content in a config or data file (carries no line info;
/// row-level CSV problems are collected as RowIssue instead).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Tensor dimensions do not match what an operation expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A sample has no usable power label.
class UnlabeledSampleError : public Error {
public:
    using Error::Error;
};

/// Not enough data to perform the operation (flight shorter than the
/// window, empty dataset, fewer items than folds).
class DataError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure.
class IoError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class VersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

}  // namespace dronepower
