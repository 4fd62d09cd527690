#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "zkaudit/air/field.hpp"

namespace zkaudit::air {

// A lookup relation T_m. Explicit tables list their rows; range and function
// tables are described by a predicate whose accepted set is exactly the
// enumerated table, so membership checks stay literal without materializing
// 2^(2N) rows.
class LookupTable {
 public:
  enum class Kind { kExplicit, kRange, kFunction };

  static LookupTable explicit_rows(std::string name, std::size_t arity, std::vector<std::vector<Fe>> rows);
  // {x : x + offset in [0, 2^bits)} as a 1-column table.
  static LookupTable range(std::string name, unsigned bits, std::int64_t offset = 0);
  // {(x, fn(x)) : lo <= x <= hi} as a 2-column table.
  static LookupTable function(std::string name, std::int64_t lo, std::int64_t hi,
                              std::function<std::int64_t(std::int64_t)> fn);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::size_t arity() const { return arity_; }
  // Number of table rows; saturates at UINT64_MAX for very wide ranges.
  std::uint64_t size() const;

  unsigned range_bits() const { return bits_; }
  std::int64_t range_offset() const { return offset_; }
  std::int64_t domain_lo() const { return lo_; }
  std::int64_t domain_hi() const { return hi_; }
  const std::vector<std::vector<Fe>>& rows() const { return rows_; }

  bool contains(const PrimeField& field, std::span<const Fe> tuple) const;

  // For 2-column tables: the output paired with input x. nullopt if x is
  // outside the table's domain.
  std::optional<Fe> evaluate(const PrimeField& field, const Fe& x) const;
  std::optional<std::int64_t> evaluate_i64(std::int64_t x) const;

  // Any valid row, used to fill unused lookup slots.
  std::vector<Fe> filler(const PrimeField& field) const;

 private:
  LookupTable() = default;

  Kind kind_ = Kind::kExplicit;
  std::string name_;
  std::size_t arity_ = 1;
  unsigned bits_ = 0;
  std::int64_t offset_ = 0;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  std::function<std::int64_t(std::int64_t)> fn_;
  std::vector<std::vector<Fe>> rows_;
  std::unordered_set<std::string> index_;
};

}  // namespace zkaudit::air

#include "zkaudit/fxp.hpp"

namespace zkaudit::air {

// Raw-unit definitions of the standard nonlinearity tables. The circuit
// tables and the plain fixed-point path both call these, so they cannot
// disagree.
std::int64_t relu6_raw(std::int64_t x, const fxp::FxpSpec& spec);
std::int64_t relu6_grad_raw(std::int64_t x, const fxp::FxpSpec& spec);
// -ceil(SF * ln(2 SF)); below it exp(x / SF) * SF rounds to zero.
std::int64_t exp_floor(const fxp::FxpSpec& spec);
// round(SF * exp(x / SF)) for exp_floor <= x <= 0.
std::int64_t exp_raw(std::int64_t x, const fxp::FxpSpec& spec);

}  // namespace zkaudit::air
