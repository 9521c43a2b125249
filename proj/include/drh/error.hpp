#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drh {

enum class ErrorCode {
  MalformedHeader,
  VersionMismatch,
  DimensionMismatch,
  NonFiniteValue,
  IoFailure,
  EmptyProjection,
  LengthMismatch,
  EmptyTrainingSet,
  DivergenceDetected,
  DuplicateImageId,
  UnknownImage,
  ExpansionDepthExceedsList,
  EmptyPositives,
  MissingQueryResult,
  MalformedQueryFile,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (the CLI in particular) can map them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace drh
