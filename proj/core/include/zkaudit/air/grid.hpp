#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zkaudit/air/field.hpp"

namespace zkaudit::air {

struct Cell {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

bool is_power_of_two(std::size_t n);

// R x C advice cells over F_q, each optionally assigned, plus named 0/1
// selector columns. R is always a power of two.
class Grid {
 public:
  Grid(std::shared_ptr<const PrimeField> field, std::size_t rows, std::size_t cols);

  const PrimeField& field() const { return *field_; }
  const std::shared_ptr<const PrimeField>& field_ptr() const { return field_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void assign(Cell cell, const Fe& value);
  void assign_i64(Cell cell, std::int64_t value) { assign(cell, field_->from_i64(value)); }
  void unassign(Cell cell);
  bool is_assigned(Cell cell) const { return assigned_[index(cell)] != 0; }
  std::optional<Fe> get(Cell cell) const;
  // Throws Error(kUnassignedCell) when the cell has no value.
  const Fe& value(Cell cell) const;
  // Raw access without the assignment check; valid only for assigned cells.
  const Fe& raw(std::size_t row, std::size_t col) const { return cells_[row * cols_ + col]; }

  std::uint32_t add_selector(std::string name);
  std::optional<std::uint32_t> find_selector(const std::string& name) const;
  std::size_t selector_count() const { return selector_names_.size(); }
  const std::string& selector_name(std::uint32_t sel) const { return selector_names_.at(sel); }
  void set_selector(std::uint32_t sel, std::size_t row, bool on = true);
  bool selector(std::uint32_t sel, std::size_t row) const { return selectors_[sel][row] != 0; }

  // Grows (or shrinks) to a new power-of-two row count, keeping existing rows.
  void resize_rows(std::size_t rows);

 private:
  std::size_t index(Cell cell) const;

  std::shared_ptr<const PrimeField> field_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Fe> cells_;
  std::vector<std::uint8_t> assigned_;
  std::vector<std::string> selector_names_;
  std::vector<std::vector<std::uint8_t>> selectors_;
};

}  // namespace zkaudit::air
