#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "zkaudit/air/field.hpp"
#include "zkaudit/air/grid.hpp"

namespace zkaudit::air {

// coeff * prod(row[columns]); an empty column list is a constant term.
struct Monomial {
  Fe coeff;
  std::vector<std::uint32_t> columns;
};

// Polynomial over the advice cells of a single row.
class Polynomial {
 public:
  Polynomial() = default;

  Polynomial& term(const PrimeField& field, std::int64_t coeff, std::vector<std::uint32_t> columns);
  Polynomial& term(const Fe& coeff, std::vector<std::uint32_t> columns);

  const std::vector<Monomial>& terms() const { return terms_; }
  std::size_t degree() const;
  std::uint32_t max_column() const;

  // Evaluates on one grid row; throws Error(kUnassignedCell) if a referenced
  // cell is unassigned.
  Fe evaluate(const Grid& grid, std::size_t row) const;

 private:
  std::vector<Monomial> terms_;
};

struct EqualityConstraint {
  Cell a;
  Cell b;
};

// On every row where `selector` is set, the tuple of the listed columns must
// be a row of table `table`.
struct LookupConstraint {
  std::string name;
  std::uint32_t selector = 0;
  std::vector<std::uint32_t> columns;
  std::uint32_t table = 0;
};

// On every row where `selector` is set, `poly` must evaluate to zero.
struct GateConstraint {
  std::string name;
  std::uint32_t selector = 0;
  Polynomial poly;
};

using Constraint = std::variant<EqualityConstraint, LookupConstraint, GateConstraint>;

}  // namespace zkaudit::air
