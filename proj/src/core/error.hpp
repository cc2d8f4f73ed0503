#pragma once

#include <stdexcept>
#include <string>

namespace mstudio {

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  OutOfReach,
  Parse,
  Validation,
  UnsupportedVersion,
  UnknownPreset,
  ModelMismatch,
  Busy,
  TooShort,
  Io,
  PortBusy,
  Protocol,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the core; the C layer maps `code()` onto status
// values and keeps `what()` as the last-error text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mstudio
