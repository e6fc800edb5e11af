#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace arg {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or out-of-range configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was called with inputs that violate its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A normalized relation row has zero total mass (0/0).
class DegenerateRowError : public PreconditionError {
 public:
  DegenerateRowError(std::size_t row, const std::string& what)
      : PreconditionError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// A class label outside [0, classes).
class LabelError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary container. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& what)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace arg
