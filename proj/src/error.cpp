#include "mdts/error.hpp"

namespace mdts {

const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kDomainTooSmall: return "DomainTooSmall";
    case ErrorCode::kNonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kInvalidBounds: return "InvalidBounds";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kTooFewDomains: return "TooFewDomains";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidBinCount: return "InvalidBinCount";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingOracle: return "MissingOracle";
    case ErrorCode::kTooManyDomains: return "TooManyDomains";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace mdts
