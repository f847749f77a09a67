#include "routefed/error.hpp"

namespace routefed {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kNoRoute: return "NoRoute";
    case ErrorCode::kDiscontiguousRoute: return "DiscontiguousRoute";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kNotDivisible: return "NotDivisible";
    case ErrorCode::kDegenerateTarget: return "DegenerateTarget";
    case ErrorCode::kSpanTooShort: return "SpanTooShort";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kRTooLarge: return "RTooLarge";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace routefed
