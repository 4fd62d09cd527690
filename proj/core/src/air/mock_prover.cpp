#include "zkaudit/air/mock_prover.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "zkaudit/error.hpp"

namespace zkaudit::air {

Polynomial& Polynomial::term(const PrimeField& field, std::int64_t coeff, std::vector<std::uint32_t> columns) {
  return term(field.from_i64(coeff), std::move(columns));
}

Polynomial& Polynomial::term(const Fe& coeff, std::vector<std::uint32_t> columns) {
  terms_.push_back(Monomial{coeff, std::move(columns)});
  return *this;
}

std::size_t Polynomial::degree() const {
  std::size_t d = 0;
  for (const auto& t : terms_) d = std::max(d, t.columns.size());
  return d;
}

std::uint32_t Polynomial::max_column() const {
  std::uint32_t m = 0;
  for (const auto& t : terms_) {
    for (auto c : t.columns) m = std::max(m, c);
  }
  return m;
}

Fe Polynomial::evaluate(const Grid& grid, std::size_t row) const {
  const PrimeField& f = grid.field();
  Fe acc = f.zero();
  for (const auto& t : terms_) {
    Fe prod = t.coeff;
    for (auto col : t.columns) prod = f.mul(prod, grid.value(Cell{static_cast<std::uint32_t>(row), col}));
    acc = f.add(acc, prod);
  }
  return acc;
}

std::string ViolationReport::summary(std::size_t max_items) const {
  std::ostringstream out;
  out << violations.size() << " violation(s)";
  for (std::size_t i = 0; i < violations.size() && i < max_items; ++i) {
    const auto& v = violations[i];
    out << "; constraint " << v.constraint;
    if (v.row) out << " row " << *v.row;
    out << ": " << v.detail;
  }
  return out.str();
}

std::size_t configured_threads() {
  const char* env = std::getenv("ZKAUDIT_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  long n = std::strtol(env, &end, 10);
  if (end == env || n < 1) return 1;
  return static_cast<std::size_t>(std::min<long>(n, 256));
}

namespace {

std::string format_tuple(const PrimeField& field, std::span<const Fe> tuple) {
  std::string out = "(";
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (i) out += ", ";
    out += field.to_hex(tuple[i]);
  }
  return out + ")";
}

void check_one(const Grid& grid, std::size_t id, const Constraint& constraint, std::span<const LookupTable> tables,
               std::vector<Violation>& out) {
  const PrimeField& field = grid.field();
  if (const auto* eq = std::get_if<EqualityConstraint>(&constraint)) {
    const Fe& a = grid.value(eq->a);
    const Fe& b = grid.value(eq->b);
    if (!(a == b)) {
      out.push_back({id, std::nullopt,
                     "equality (" + std::to_string(eq->a.row) + "," + std::to_string(eq->a.col) + ")=" +
                         field.to_hex(a) + " vs (" + std::to_string(eq->b.row) + "," + std::to_string(eq->b.col) +
                         ")=" + field.to_hex(b)});
    }
    return;
  }
  if (const auto* gate = std::get_if<GateConstraint>(&constraint)) {
    if (gate->selector >= grid.selector_count()) throw Error(Errc::kInvalidArgument, "gate references unknown selector");
    for (std::size_t row = 0; row < grid.rows(); ++row) {
      if (!grid.selector(gate->selector, row)) continue;
      Fe residual = gate->poly.evaluate(grid, row);
      if (!field.is_zero(residual)) out.push_back({id, row, gate->name + " residual " + field.to_hex(residual)});
    }
    return;
  }
  const auto& lookup = std::get<LookupConstraint>(constraint);
  if (lookup.table >= tables.size()) throw Error(Errc::kInvalidArgument, "lookup references unregistered table");
  if (lookup.selector >= grid.selector_count()) throw Error(Errc::kInvalidArgument, "lookup references unknown selector");
  const LookupTable& table = tables[lookup.table];
  std::vector<Fe> tuple(lookup.columns.size());
  for (std::size_t row = 0; row < grid.rows(); ++row) {
    if (!grid.selector(lookup.selector, row)) continue;
    for (std::size_t k = 0; k < lookup.columns.size(); ++k) {
      tuple[k] = grid.value(Cell{static_cast<std::uint32_t>(row), lookup.columns[k]});
    }
    if (!table.contains(field, tuple)) {
      out.push_back({id, row, lookup.name + " tuple " + format_tuple(field, tuple) + " not in " + table.name()});
    }
  }
}

}  // namespace

ViolationReport check_constraints(const Grid& grid, std::span<const Constraint> constraints,
                                  std::span<const LookupTable> tables) {
  for (const auto& t : tables) {
    if (t.kind() == LookupTable::Kind::kExplicit && t.size() > grid.rows()) {
      throw Error(Errc::kCapacityExceeded, "table " + t.name() + " has more rows than the grid");
    }
  }

  ViolationReport report;
  std::size_t threads = std::min(configured_threads(), std::max<std::size_t>(constraints.size(), 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < constraints.size(); ++i) check_one(grid, i, constraints[i], tables, report.violations);
    return report;
  }

  std::vector<std::vector<Violation>> partial(threads);
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < constraints.size(); i += threads) {
          check_one(grid, i, constraints[i], tables, partial[t]);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& p : partial) report.violations.insert(report.violations.end(), p.begin(), p.end());
  std::stable_sort(report.violations.begin(), report.violations.end(), [](const Violation& a, const Violation& b) {
    if (a.constraint != b.constraint) return a.constraint < b.constraint;
    return a.row.value_or(0) < b.row.value_or(0);
  });
  return report;
}

}  // namespace zkaudit::air
