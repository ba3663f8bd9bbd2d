#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsacl {

enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kMissingField,
  kSizeMismatch,
  kLabelOutOfRange,
  kDimensionMismatch,
  kNonFinite,
  kSingular,
  kClassCollision,
  kRegistryMismatch,
  kBadMagic,
  kVersionMismatch,
  kChecksum,
  kTruncated,
  kIo,
  kConfig,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library. `code()` is stable and machine readable;
/// `what()` carries the offending field or value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace tsacl
