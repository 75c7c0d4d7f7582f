#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace memdes {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed run configuration, objective prerequisites or word/bundle mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version or section layout in an operator file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, was truncated or could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A bundle violates one of its structural invariants.
class ValidationError : public Error {
 public:
  ValidationError(std::string check, const std::string& detail)
      : Error(check + ": " + detail), check_(std::move(check)) {}

  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

/// Parameters outside the domain of a generator or solver.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The reduced system Z[S,S] of a word is numerically singular.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace memdes
