#pragma once

#include <stdexcept>
#include <string>

namespace cse {

enum class ErrorKind {
  io,
  format,
  shape_mismatch,
  non_finite,
  duplicate_id,
  invalid_argument,
  dimension_mismatch,
  degenerate_direction,
  undefined_distribution,
  zero_variance,
  insufficient_data,
  out_of_range,
  not_converged,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace cse
