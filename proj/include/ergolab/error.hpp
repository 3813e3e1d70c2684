#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergolab {

enum class ErrorCode {
  kInvalidArgument,
  kDistinctSpace,
  kInsufficientData,
  kIncompatibleDistribution,
  kLengthMismatch,
  kInvalidModel,
  kSymbolOutOfAlphabet,
  kNullConditioning,
  kCapacity,
  kImpossiblePath,
  kInternalConsistency,
  kInfeasibleTower,
  kEpsilonTooLarge,
  kBudgetExceeded,
  kCodebook,
  kDesync,
  kCorruption,
  kAtypicalColumn,
  kUnsupportedName,
  kValidation,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library is reported through this type; `code()` is
// the stable part, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ergolab
