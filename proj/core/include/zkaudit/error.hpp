#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zkaudit {

enum class Errc {
  kRangeOverflow,
  kDivisionByZero,
  kUnassignedCell,
  kWidthExceeded,
  kShapeMismatch,
  kDomainMiss,
  kCapacityExceeded,
  kUnsatisfiedWitness,
  kEmptyLeaves,
  kInvalidArgument,
  kWeightCommitmentMismatch,
  kInsufficientSamples,
  kDimensionMismatch,
  kZeroNorm,
  kLabelOutOfRange,
  kIo,
  kParse,
  kValidation,
};

std::string_view errc_name(Errc code) noexcept;

// Every library failure surfaces as this exception; `code()` lets callers
// (the CLI in particular) map failures onto stable exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace zkaudit
