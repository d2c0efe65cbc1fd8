#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pnas3d {

enum class ErrorCode {
  EmptyValidSet,
  ShapeMismatch,
  TooFewPoints,
  DegenerateGeometry,
  DegenerateBounds,
  InvalidParameter,
  InvalidThreshold,
  ParseError,
  UnsupportedProperty,
  IoError,
};

/// Broad failure class; the CLI maps each one to an exit code.
enum class ErrorCategory { Parse = 1, Geometry = 2, Io = 3 };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

/// Every failure raised by the library. `stage` names the pipeline stage
/// (e.g. "parameterize", "read_cloud") and `field` names the offending
/// parameter for validation errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string stage, const std::string& message,
        std::string field = {});

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error re-tagged with an outer stage, keeping the original detail.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string field_;
  std::string detail_;
};

}  // namespace pnas3d
