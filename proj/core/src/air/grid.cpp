#include "zkaudit/air/grid.hpp"

#include "zkaudit/error.hpp"

namespace zkaudit::air {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Grid::Grid(std::shared_ptr<const PrimeField> field, std::size_t rows, std::size_t cols)
    : field_(std::move(field)), rows_(rows), cols_(cols), cells_(rows * cols), assigned_(rows * cols, 0) {
  if (!is_power_of_two(rows)) {
    throw Error(Errc::kInvalidArgument, "grid row count must be a power of two, got " + std::to_string(rows));
  }
  if (cols == 0) throw Error(Errc::kInvalidArgument, "grid needs at least one column");
}

std::size_t Grid::index(Cell cell) const {
  if (cell.row >= rows_ || cell.col >= cols_) {
    throw Error(Errc::kInvalidArgument, "cell (" + std::to_string(cell.row) + "," + std::to_string(cell.col) +
                                            ") outside " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                                            " grid");
  }
  return static_cast<std::size_t>(cell.row) * cols_ + cell.col;
}

void Grid::assign(Cell cell, const Fe& value) {
  std::size_t i = index(cell);
  cells_[i] = value;
  assigned_[i] = 1;
}

void Grid::unassign(Cell cell) {
  std::size_t i = index(cell);
  cells_[i] = Fe{};
  assigned_[i] = 0;
}

std::optional<Fe> Grid::get(Cell cell) const {
  std::size_t i = index(cell);
  if (assigned_[i] == 0) return std::nullopt;
  return cells_[i];
}

const Fe& Grid::value(Cell cell) const {
  std::size_t i = index(cell);
  if (assigned_[i] == 0) {
    throw Error(Errc::kUnassignedCell,
                "cell (" + std::to_string(cell.row) + "," + std::to_string(cell.col) + ") is unassigned");
  }
  return cells_[i];
}

std::uint32_t Grid::add_selector(std::string name) {
  if (find_selector(name)) throw Error(Errc::kInvalidArgument, "duplicate selector " + name);
  selector_names_.push_back(std::move(name));
  selectors_.emplace_back(rows_, 0);
  return static_cast<std::uint32_t>(selector_names_.size() - 1);
}

std::optional<std::uint32_t> Grid::find_selector(const std::string& name) const {
  for (std::size_t i = 0; i < selector_names_.size(); ++i) {
    if (selector_names_[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

void Grid::set_selector(std::uint32_t sel, std::size_t row, bool on) {
  if (sel >= selectors_.size() || row >= rows_) throw Error(Errc::kInvalidArgument, "selector index out of range");
  selectors_[sel][row] = on ? 1 : 0;
}

void Grid::resize_rows(std::size_t rows) {
  if (!is_power_of_two(rows)) throw Error(Errc::kInvalidArgument, "grid row count must be a power of two");
  cells_.resize(rows * cols_);
  assigned_.resize(rows * cols_, 0);
  for (auto& sel : selectors_) sel.resize(rows, 0);
  rows_ = rows;
}

}  // namespace zkaudit::air
