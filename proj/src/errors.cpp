#include "causalaf/errors.hpp"

namespace causalaf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::CyclicGraph: return "CyclicGraph";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::IncompleteRecord: return "IncompleteRecord";
    case ErrorCode::InvalidCondition: return "InvalidCondition";
    case ErrorCode::UnplaceableObject: return "UnplaceableObject";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::TooFewTemperatures: return "TooFewTemperatures";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace causalaf
