#include "drh/error.hpp"

namespace drh {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyProjection: return "EmptyProjection";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::DuplicateImageId: return "DuplicateImageId";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::ExpansionDepthExceedsList: return "ExpansionDepthExceedsList";
    case ErrorCode::EmptyPositives: return "EmptyPositives";
    case ErrorCode::MissingQueryResult: return "MissingQueryResult";
    case ErrorCode::MalformedQueryFile: return "MalformedQueryFile";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace drh
