#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rad {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  DuplicateId,
  MissingImage,
  NotFound,
  InsufficientScenes,
  InsufficientPoses,
  NoMatch,
  Ambiguous,
  EmptyBatch,
  InvalidProbability,
  DimensionMismatch,
  ZeroVector,
  CorruptStore,
  VersionMismatch,
  OmegaOutOfRange,
  EmptyStore,
  EmptyInput,
  Transport,
  BadResponse,
  DimDrift,
  ContextTooLarge,
  MissingGtAction,
  IoError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Single exception type for the engine; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rad
