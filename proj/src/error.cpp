#include "tsacl/error.hpp"

namespace tsacl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kMissingField: return "missing_field";
    case ErrorCode::kSizeMismatch: return "size_mismatch";
    case ErrorCode::kLabelOutOfRange: return "label_out_of_range";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kClassCollision: return "class_collision";
    case ErrorCode::kRegistryMismatch: return "registry_mismatch";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kChecksum: return "checksum";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace tsacl
