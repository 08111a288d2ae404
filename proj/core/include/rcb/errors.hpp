#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rcb {

enum class ErrorCode {
  InvalidParams,
  InvalidGrid,
  SpreadTooLarge,
  BufferInfeasible,
  DimensionMismatch,
  Overlap,
  InvalidProblem,
  UnsupportedFeature,
  TooLarge,
  BackendError,
  Timeout,
  Parse,
  LengthMismatch,
  Io,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the priority stack when the charging and discharging sets would
/// share an element. Carries the controller step at which it happened.
class OverlapError : public Error {
 public:
  OverlapError(std::size_t step, const std::string& message)
      : Error(ErrorCode::Overlap, message), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Malformed input file. `row` is 1-based; 0 when the row is unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& message)
      : Error(ErrorCode::Parse, message), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace rcb
