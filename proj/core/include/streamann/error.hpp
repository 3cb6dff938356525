#pragma once

#include <stdexcept>
#include <string>

namespace streamann {

enum class ErrorCode {
  kInvalidInput,
  kInvalidParameter,
  kFormat,
  kIo,
  kEmptyIndex,
  kDuplicateId,
  kNotFound,
  kAlignment,
  kValidation,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures are reported through this exception type; `code()`
// distinguishes the category for callers that need to branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace streamann
