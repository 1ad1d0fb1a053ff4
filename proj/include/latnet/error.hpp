#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied something outside an operation's domain.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Tensor or grid shapes disagree.
class ShapeError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// A contract on the call sequence was broken (e.g. backward on a non-scalar).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Numeric failure: NaN/Inf or a blown-up state. Carries the step index when known.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, long step = -1)
        : Error(step >= 0 ? what + " (step " + std::to_string(step) + ")" : what), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

/// The lattice solver produced |f| above the stability threshold or a non-finite value.
class InstabilityError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Training loss ran away from its recent average.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Drag requested on a mask without solid cells.
class EmptyBoundaryError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// Averaging requested over a mask without fluid cells.
class EmptyDomainError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// Random object placement kept failing.
class PlacementError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// Too many generated runs were unstable for the configuration to be usable.
class DistributionError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents. `offset` is the byte position where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class VersionError : public Error {
public:
    VersionError(const std::string& kind, unsigned found, unsigned expected)
        : Error(kind + " version mismatch: found " + std::to_string(found) + ", expected " +
                std::to_string(expected)),
          found_(found), expected_(expected) {}
    unsigned found() const noexcept { return found_; }
    unsigned expected() const noexcept { return expected_; }

private:
    unsigned found_;
    unsigned expected_;
};

/// Filesystem failure (missing file, permission denied).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace latnet
