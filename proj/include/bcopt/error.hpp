#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bcopt {

enum class ErrorCode {
  invalid_argument,
  validation,
  no_convergence,
  io,
  point_outside_domain,
  singular_matrix,
  nonlinearity_evaluation,
};

const char* to_string(ErrorCode code);

/// Base class for every error raised by the library. The code drives the
/// C API status and the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class PointOutsideDomain : public Error {
 public:
  explicit PointOutsideDomain(const std::string& what)
      : Error(ErrorCode::point_outside_domain, what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what) : Error(ErrorCode::singular_matrix, what) {}
};

class NonlinearityError : public Error {
 public:
  explicit NonlinearityError(const std::string& what)
      : Error(ErrorCode::nonlinearity_evaluation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

/// Iterative method ran out of budget. Carries the residual history so the
/// caller can report how far it got.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::vector<double> history)
      : Error(ErrorCode::no_convergence, what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }
  double final_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }

 private:
  std::vector<double> history_;
};

/// Config validation failure listing every violated invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace bcopt
