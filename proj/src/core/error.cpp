#include "error.hpp"

namespace mstudio {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::OutOfReach: return "target out of reach";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Validation: return "validation error";
    case ErrorCode::UnsupportedVersion: return "unsupported schema version";
    case ErrorCode::UnknownPreset: return "unknown preset";
    case ErrorCode::ModelMismatch: return "model mismatch";
    case ErrorCode::Busy: return "busy";
    case ErrorCode::TooShort: return "too short";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::PortBusy: return "port busy";
    case ErrorCode::Protocol: return "protocol error";
  }
  return "unknown error";
}

}  // namespace mstudio
