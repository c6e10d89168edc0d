#pragma once

#include <stdexcept>
#include <string>

namespace mdts {

enum class ErrorCode {
  kMissingFile,
  kSchemaViolation,
  kNonFiniteValue,
  kLabelOutOfRange,
  kIoFailure,
  kDomainTooSmall,
  kNonPositiveTemperature,
  kEmptyDataset,
  kInvalidBounds,
  kEmptyTrainingSet,
  kSingularSystem,
  kDimensionMismatch,
  kTooFewDomains,
  kEmptyInput,
  kInvalidBinCount,
  kInvalidConfig,
  kMissingOracle,
  kTooManyDomains,
  kInvalidArgument,
};

const char* ToString(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mdts
