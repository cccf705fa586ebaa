#include "rad/error.hpp"

namespace rad {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::InsufficientScenes: return "InsufficientScenes";
    case ErrorCode::InsufficientPoses: return "InsufficientPoses";
    case ErrorCode::NoMatch: return "NoMatch";
    case ErrorCode::Ambiguous: return "Ambiguous";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::OmegaOutOfRange: return "OmegaOutOfRange";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::BadResponse: return "BadResponse";
    case ErrorCode::DimDrift: return "DimDrift";
    case ErrorCode::ContextTooLarge: return "ContextTooLarge";
    case ErrorCode::MissingGtAction: return "MissingGtAction";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rad
