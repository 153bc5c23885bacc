#include "memshield/error.hpp"

namespace memshield {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NotCalibrated: return "NotCalibrated";
    case ErrorCode::InsufficientCalibration: return "InsufficientCalibration";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::DegenerateCalibration: return "DegenerateCalibration";
  }
  return "Unknown";
}

}  // namespace memshield
