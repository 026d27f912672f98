#pragma once

#include <stdexcept>
#include <string>

namespace hyperdet {

/// Failure categories. The numeric values are shared with the C API status
/// codes and, through them, with the CLI exit codes.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kConfig = 2,
  kMissingArtifact = 3,
  kExternalEnhancer = 4,
  kIo = 5,
  kFormat = 6,
  kInfeasible = 7,
  kInternal = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hyperdet
