#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mtlab {

enum class ErrorCode {
  kLineCountMismatch,
  kInvalidEncoding,
  kIo,
  kVocabTooSmall,
  kUnknownId,
  kShapeMismatch,
  kNotScalar,
  kNoTape,
  kInvalidConfig,
  kIdOutOfRange,
  kEmptyBatch,
  kEmptyCorpus,
  kDivergedLoss,
  kVocabMismatch,
  kLengthMismatch,
  kEmptyInput,
  kInvalidArgument,
  kFormat,
};

std::string_view error_code_name(ErrorCode code);

/// The single exception type thrown by the library. `code()` identifies the
/// failure class so callers (and tests) can dispatch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mtlab
