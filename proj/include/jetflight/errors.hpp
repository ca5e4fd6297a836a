#pragma once

#include <stdexcept>
#include <string>

namespace jetflight {

/// Base class for every error raised by the library. The CLI maps each
/// subclass onto a stable process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input (file missing, JSON/CSV syntax).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Least-squares design matrix without full column rank.
class RankDeficientError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Box QP with lb > ub on some coordinate.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, int coordinate)
      : Error(what), coordinate_(coordinate) {}
  int coordinate() const { return coordinate_; }

 private:
  int coordinate_;
};

/// Non-finite or runaway plant state.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

}  // namespace jetflight
