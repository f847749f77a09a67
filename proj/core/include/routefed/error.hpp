#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace routefed {

enum class ErrorCode {
  kUnknownNode,
  kNoRoute,
  kDiscontiguousRoute,
  kInvalidGraph,
  kInvalidArgument,
  kIo,
  kParse,
  kNotDivisible,
  kDegenerateTarget,
  kSpanTooShort,
  kShapeMismatch,
  kRTooLarge,
  kNonFiniteLoss,
  kEmptyInput,
  kInvalidScenario,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() is stable and is
// what the CLI reports in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace routefed
