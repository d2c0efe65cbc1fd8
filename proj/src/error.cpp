#include "pnas3d/error.hpp"

namespace pnas3d {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyValidSet: return "EmptyValidSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::DegenerateBounds: return "DegenerateBounds";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedProperty: return "UnsupportedProperty";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::UnsupportedProperty:
    case ErrorCode::InvalidParameter:
      return ErrorCategory::Parse;
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Geometry;
  }
}

namespace {
std::string compose(ErrorCode code, const std::string& stage,
                    const std::string& message) {
  std::string out = "[";
  out += stage;
  out += "] ";
  out += to_string(code);
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, std::string stage, const std::string& message,
             std::string field)
    : std::runtime_error(compose(code, stage, message)),
      code_(code),
      stage_(std::move(stage)),
      field_(std::move(field)),
      detail_(message) {}

Error Error::with_stage(std::string stage) const {
  return Error(code_, std::move(stage), detail_, field_);
}

}  // namespace pnas3d
