#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace memshield {

enum class ErrorCode {
  EmptyInput,
  DimensionMismatch,
  ParseError,
  EmptyStore,
  NotFound,
  DuplicateId,
  ConfigError,
  NotCalibrated,
  InsufficientCalibration,
  NumericalError,
  DegenerateCalibration,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and machine-checkable; the message carries context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failures keep the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace memshield
