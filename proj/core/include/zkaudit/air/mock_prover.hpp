#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zkaudit/air/constraint.hpp"
#include "zkaudit/air/grid.hpp"
#include "zkaudit/air/lookup.hpp"

namespace zkaudit::air {

struct Violation {
  std::size_t constraint = 0;
  std::optional<std::size_t> row;  // empty for equality constraints spanning rows
  std::string detail;              // residual, or the missing tuple
};

struct ViolationReport {
  std::vector<Violation> violations;

  bool empty() const { return violations.empty(); }
  std::size_t size() const { return violations.size(); }
  std::string summary(std::size_t max_items = 5) const;
};

// Checks every constraint against the witness directly. Gates and lookups are
// evaluated on each row whose selector is set. Throws Error(kUnassignedCell)
// if an active constraint touches an unassigned cell and
// Error(kCapacityExceeded) if an explicit table has more rows than the grid.
// Violations are reported in (constraint, row) order. Work is split across
// ZKAUDIT_THREADS threads when that variable is set above 1.
ViolationReport check_constraints(const Grid& grid, std::span<const Constraint> constraints,
                                  std::span<const LookupTable> tables);

// Thread count taken from ZKAUDIT_THREADS (default 1).
std::size_t configured_threads();

}  // namespace zkaudit::air
