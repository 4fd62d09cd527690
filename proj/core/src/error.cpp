#include "zkaudit/error.hpp"

namespace zkaudit {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kRangeOverflow: return "range-overflow";
    case Errc::kDivisionByZero: return "division-by-zero";
    case Errc::kUnassignedCell: return "unassigned-cell";
    case Errc::kWidthExceeded: return "width-exceeded";
    case Errc::kShapeMismatch: return "shape-mismatch";
    case Errc::kDomainMiss: return "domain-miss";
    case Errc::kCapacityExceeded: return "capacity-exceeded";
    case Errc::kUnsatisfiedWitness: return "unsatisfied-witness";
    case Errc::kEmptyLeaves: return "empty-leaves";
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kWeightCommitmentMismatch: return "weight-commitment-mismatch";
    case Errc::kInsufficientSamples: return "insufficient-samples";
    case Errc::kDimensionMismatch: return "dimension-mismatch";
    case Errc::kZeroNorm: return "zero-norm";
    case Errc::kLabelOutOfRange: return "label-out-of-range";
    case Errc::kIo: return "io";
    case Errc::kParse: return "parse";
    case Errc::kValidation: return "validation";
  }
  return "unknown";
}

}  // namespace zkaudit
