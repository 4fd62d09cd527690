#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zkaudit/air/constraint.hpp"
#include "zkaudit/air/grid.hpp"
#include "zkaudit/air/lookup.hpp"
#include "zkaudit/air/mock_prover.hpp"
#include "zkaudit/fxp.hpp"

namespace zkaudit::air {

inline constexpr std::size_t kDefaultColumns = 16;
inline constexpr std::size_t kMinColumns = 10;
inline constexpr std::size_t kUnboundedRows = std::size_t{1} << 26;

// A finished constraint system together with its witness.
struct Circuit {
  Grid grid;
  std::vector<Constraint> constraints;
  std::vector<LookupTable> tables;

  ViolationReport check() const { return check_constraints(grid, constraints, tables); }
};

// Input to a gadget slot: either an existing cell, which is copied in under an
// equality constraint, or a fresh value assigned directly into the slot.
class Operand {
 public:
  Operand(Cell cell) : v_(cell) {}  // NOLINT(google-explicit-constructor)
  static Operand fresh(const Fe& value) { return Operand(value); }

  bool is_cell() const { return std::holds_alternative<Cell>(v_); }
  Cell cell() const { return std::get<Cell>(v_); }
  const Fe& fresh_value() const { return std::get<Fe>(v_); }

 private:
  explicit Operand(const Fe& value) : v_(value) {}
  std::variant<Cell, Fe> v_;
};

struct RowRange {
  std::size_t begin = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  friend bool operator==(const RowRange&, const RowRange&) = default;
};

struct PackedLayout {
  std::size_t first_row = 0;
  std::size_t rows_per_instance = 0;
  std::size_t grid_rows = 0;
  std::vector<RowRange> instances;
};

// Row plan for `count` instances of a gadget occupying `rows_per_instance`
// rows each, placed after `table_rows` rows reserved for explicit lookup
// tables. Throws Error(kCapacityExceeded) if they do not fit in `grid_rows`.
PackedLayout plan_packing(std::size_t rows_per_instance, std::size_t count, std::size_t grid_rows,
                          std::size_t table_rows);

struct SoftmaxRaw {
  std::vector<std::int64_t> e;
  std::int64_t s = 0;
  std::vector<std::int64_t> y;
};
// The same softmax evaluated directly on raw values.
SoftmaxRaw softmax_raw(std::span<const std::int64_t> xs, const fxp::FxpSpec& spec);

// Synthesizes gadgets row by row. Every gadget family owns one selector per
// arity variant and registers its gates and lookups once, on first use; each
// instance then occupies fresh rows and wires its inputs in with equality
// constraints. Outputs are cells whose values were computed during synthesis.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(const fxp::FxpSpec& spec, std::size_t columns = kDefaultColumns,
                          std::size_t reserved_rows = 0, std::size_t max_rows = kUnboundedRows);

  const fxp::FxpSpec& spec() const { return spec_; }
  const PrimeField& field() const { return *field_; }
  std::size_t columns() const { return cols_; }
  std::size_t reserved_rows() const { return reserved_rows_; }
  // Rows occupied so far, including reserved table rows.
  std::size_t rows_used() const { return next_row_; }
  const Grid& grid() const { return grid_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const std::vector<LookupTable>& tables() const { return tables_; }

  Operand fresh(std::int64_t value) const { return Operand::fresh(field_->from_i64(value)); }
  Operand fresh_fe(const Fe& value) const { return Operand::fresh(value); }

  // Unconstrained private input.
  Cell witness(std::int64_t value);
  Cell witness_fe(const Fe& value);
  // Cell pinned to `value` by a gate; one per distinct value.
  Cell constant(std::int64_t value);

  Fe value(Cell cell) const { return grid_.value(cell); }
  // Signed interpretation of a cell; throws kRangeOverflow if it is not a
  // small integer.
  std::int64_t signed_value(Cell cell) const;
  std::int64_t signed_value(const Operand& op) const;

  void assert_equal(Cell a, Cell b);

  // z = sum(xs) in one row; |xs| <= C - 1 or kWidthExceeded.
  Cell sum(std::span<const Operand> xs);
  // Sum of any length, chained through partial sums.
  Cell sum_chain(std::span<const Operand> xs);
  // z = b + sum(x_i * y_i); rows hold floor((C-2)/2) terms each and are
  // chained by feeding each row's output in as the next row's bias.
  Cell dot_bias(std::span<const Operand> xs, std::span<const Operand> ys, const Operand& bias);
  std::size_t dot_terms_per_row() const { return (cols_ - 2) / 2; }

  // (x, T(x)) lookups packed two columns per pair; kDomainMiss if some x is
  // outside the table's domain.
  std::vector<Cell> apply_table(std::uint32_t table, std::span<const Operand> xs);
  Cell apply_table(std::uint32_t table, const Operand& x);

  // Range lookups; returns the placed cells. Signed ranges check
  // x + 2^(bits-1) in [0, 2^bits). kRangeOverflow if a value is outside.
  std::vector<Cell> range_check(std::span<const Operand> xs, unsigned bits, bool is_signed = false);

  struct DivCells {
    Cell b;
    Cell r;
  };
  // 2a + c = 2c*b + r with b, c < 2^N, c >= 1, a, r, 2c - r - 1 < 2^(2N).
  DivCells round_div(const Operand& a, const Operand& c);
  // Sign-magnitude wrapper: b = (1 - 2s) * round_div(|a|, c).
  Cell round_div_signed(const Operand& a, const Operand& c);

  // c = max(a, b) via (c - a)(c - b) = 0 and c - a, c - b < 2^bits.
  Cell max(const Operand& a, const Operand& b, unsigned bits);
  Cell max(const Operand& a, const Operand& b) { return max(a, b, static_cast<unsigned>(spec_.range_bits)); }
  // Sequential fold of pairwise max.
  Cell max_fold(std::span<const Operand> xs, unsigned bits);

  Cell add(const Operand& a, const Operand& b);
  Cell sub(const Operand& a, const Operand& b);
  Cell mul(const Operand& a, const Operand& b);
  std::vector<Cell> add_many(std::span<const Operand> a, std::span<const Operand> b);
  std::vector<Cell> sub_many(std::span<const Operand> a, std::span<const Operand> b);
  std::vector<Cell> mul_many(std::span<const Operand> a, std::span<const Operand> b);

  // bit = [a <= b] for |a - b| < 2^bits.
  Cell less_equal(const Operand& a, const Operand& b, unsigned bits);

  struct SoftmaxCells {
    std::vector<Cell> e;
    Cell s;
    std::vector<Cell> y;
  };
  // Max-subtracted softmax at the builder's SF: e_i = exp(max(x_i - max x,
  // floor)), s = sum e, y_i = round_div(SF * e_i, s). Logits are signed with
  // |x| < 2^N.
  SoftmaxCells softmax(std::span<const Operand> xs);

  // Boolean cells with exactly one set bit, at `index`.
  std::vector<Cell> one_hot(std::size_t index, std::size_t size);

  // Standard tables, registered on first request.
  std::uint32_t range_table(unsigned bits, bool is_signed = false);
  std::uint32_t relu6_table();
  std::uint32_t relu6_grad_table();
  std::uint32_t exp_table();
  // Floor of the exp table's domain: -ceil(SF * ln(2 SF)).
  std::int64_t exp_floor() const;
  // Registers a table; explicit tables must fit in the reserved rows.
  std::uint32_t add_table(LookupTable table);

  // Lays out `count` instances in disjoint row ranges (sharing selectors and
  // tables). The first instance fixes the per-instance row count; capacity is
  // checked against max_rows before the rest are synthesized.
  PackedLayout pack(std::size_t count, const std::function<void(CircuitBuilder&, std::size_t)>& instance);

  // Pads the grid to a power-of-two row count and hands over the circuit.
  Circuit build() &&;

 private:
  struct Family {
    std::uint32_t selector;
  };

  std::uint32_t allocate_row();
  Cell place(std::uint32_t row, std::uint32_t col, const Operand& op);
  void put(std::uint32_t row, std::uint32_t col, const Fe& value);
  std::uint32_t family(const std::string& key, const std::function<void(std::uint32_t)>& define);
  void add_gate(std::string name, std::uint32_t selector, Polynomial poly);
  void add_lookup(std::string name, std::uint32_t selector, std::vector<std::uint32_t> columns, std::uint32_t table);
  std::vector<Cell> binary_many(const char* op, std::span<const Operand> a, std::span<const Operand> b);
  void ensure_capacity(std::size_t rows);

  fxp::FxpSpec spec_;
  std::shared_ptr<const PrimeField> field_;
  std::size_t cols_;
  std::size_t reserved_rows_;
  std::size_t max_rows_;
  Grid grid_;
  std::size_t next_row_;
  std::vector<Constraint> constraints_;
  std::vector<LookupTable> tables_;
  std::map<std::string, std::uint32_t> table_ids_;
  std::map<std::string, Family> families_;
  std::map<std::int64_t, Cell> constants_;
  std::uint32_t witness_row_ = 0;
  std::uint32_t witness_col_ = 0;
  bool witness_row_open_ = false;
};

}  // namespace zkaudit::air
