#pragma once

#include <stdexcept>
#include <string>

namespace torgap {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that cannot be combined.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An input violates the documented precondition of an operation.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Right-hand side outside the range of an operator.
class InconsistentError : public PreconditionError {
 public:
  InconsistentError(const std::string &what, double residual)
      : PreconditionError(what), residual_(residual) {}
  [[nodiscard]] double residual() const { return residual_; }

 private:
  double residual_;
};

// The filling operator has a cokernel; carries its dimension.
class NotSurjectiveError : public PreconditionError {
 public:
  NotSurjectiveError(const std::string &what, std::size_t defect)
      : PreconditionError(what), defect_(defect) {}
  [[nodiscard]] std::size_t defect() const { return defect_; }

 private:
  std::size_t defect_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A checked mathematical statement failed on concrete data.
class FalsifiedInvariant : public Error {
 public:
  using Error::Error;
};

} // namespace torgap
