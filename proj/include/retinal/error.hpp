#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retinal {

enum class ErrorKind {
  invalid_argument,
  domain_too_small,
  normalization_failure,
  no_crossing,
  calibration_failure,
  step_instability,
  schedule_out_of_range,
  step_too_large,
  invalid_n,
  io_error,
  config_error,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and tests)
/// can branch on the category without parsing messages.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw SimulationError(kind, what);
}

}  // namespace retinal
