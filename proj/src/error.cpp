#include "cse/error.hpp"

namespace cse {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::duplicate_id: return "duplicate_id";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::degenerate_direction: return "degenerate_direction";
    case ErrorKind::undefined_distribution: return "undefined_distribution";
    case ErrorKind::zero_variance: return "zero_variance";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::not_converged: return "not_converged";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

}  // namespace cse
