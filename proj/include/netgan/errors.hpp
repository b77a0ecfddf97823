#pragma once

#include <stdexcept>
#include <string>

namespace netgan {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or dataset dimensions disagree with what an operation expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed text input (CSV cells, config values, report files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid argument values that are not shape problems (bad lambda, T > L, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Training hit a non-finite loss. Message names epoch and batch.
class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    enum class Kind { VersionMismatch, ShapeMismatch, Corrupt };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace netgan
