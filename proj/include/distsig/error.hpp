#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace distsig {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or sizes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a value was violated (self-loop, bad probability, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An exact search would exceed its configured cap. `count` carries the
/// size that was measured when it is known (e.g. the Kirchhoff tree count).
class LimitError : public Error {
 public:
  LimitError(const std::string& what, std::uint64_t count = 0)
      : Error(what), count_(count) {}
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_;
};

/// Non-finite values, non-convergence, infeasible internal LPs.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace distsig
