#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lt3d {

enum class ErrorCode {
  kParse,
  kIo,
  kInvalidArgument,
  kMissingFile,
  kDegenerate,
  kSolverFailure,
  kNoRestrictedTransform,
  kNothingToSnap,
  kUnknownType,
  kDuplicate,
  kSchema,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kDegenerate: return "degenerate_input";
    case ErrorCode::kSolverFailure: return "solver_failure";
    case ErrorCode::kNoRestrictedTransform: return "no_restricted_transform";
    case ErrorCode::kNothingToSnap: return "nothing_to_snap";
    case ErrorCode::kUnknownType: return "unknown_type";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kSchema: return "schema_error";
  }
  return "error";
}

/// Every failure raised by the engine carries a machine-readable code so the
/// service can map it onto an error envelope without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lt3d
