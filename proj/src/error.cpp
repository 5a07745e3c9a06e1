#include "bcopt/error.hpp"

#include <sstream>

namespace bcopt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return "invalid argument";
    case ErrorCode::validation:
      return "validation error";
    case ErrorCode::no_convergence:
      return "no convergence";
    case ErrorCode::io:
      return "I/O error";
    case ErrorCode::point_outside_domain:
      return "point outside domain";
    case ErrorCode::singular_matrix:
      return "singular matrix";
    case ErrorCode::nonlinearity_evaluation:
      return "nonlinearity evaluation error";
  }
  return "unknown error";
}

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::ostringstream out;
  out << violations.size() << " validation error(s):";
  for (const auto& v : violations) out << "\n  - " << v;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(ErrorCode::validation, join_violations(violations)), violations_(std::move(violations)) {}

}  // namespace bcopt
