#include "zkaudit/air/encode.hpp"

#include <array>

namespace zkaudit::air {

void ByteSink::u32(std::uint32_t v) {
  std::array<std::uint8_t, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  write(b);
}

void ByteSink::u64(std::uint64_t v) {
  std::array<std::uint8_t, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  write(b);
}

void ByteSink::str(std::string_view s) {
  u64(s.size());
  write(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void encode_fe(const PrimeField& field, const Fe& value, ByteSink& out) {
  U256 v = field.to_u256(value);
  for (std::uint64_t limb : v.limbs) out.u64(limb);
}

void encode_witness(const Grid& grid, ByteSink& out) {
  out.u64(grid.rows());
  out.u64(grid.cols());
  // Buffer one column at a time; per-cell virtual calls dominate otherwise.
  VectorSink col;
  for (std::size_t c = 0; c < grid.cols(); ++c) {
    col.data.clear();
    col.data.reserve(grid.rows() * 33);
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      Cell cell{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)};
      if (grid.is_assigned(cell)) {
        col.u8(1);
        encode_fe(grid.field(), grid.raw(r, c), col);
      } else {
        col.u8(0);
      }
    }
    out.write(col.data);
  }
}

namespace {

void encode_cell(Cell c, ByteSink& out) {
  out.u32(c.row);
  out.u32(c.col);
}

void encode_table(const PrimeField& field, const LookupTable& t, ByteSink& out) {
  out.u8(static_cast<std::uint8_t>(t.kind()));
  out.str(t.name());
  out.u64(t.arity());
  switch (t.kind()) {
    case LookupTable::Kind::kRange:
      out.u32(t.range_bits());
      out.i64(t.range_offset());
      break;
    case LookupTable::Kind::kFunction:
      out.i64(t.domain_lo());
      out.i64(t.domain_hi());
      break;
    case LookupTable::Kind::kExplicit:
      out.u64(t.rows().size());
      for (const auto& row : t.rows()) {
        for (const Fe& v : row) encode_fe(field, v, out);
      }
      break;
  }
}

}  // namespace

void encode_constraint_system(const Grid& grid, const std::vector<Constraint>& constraints,
                              const std::vector<LookupTable>& tables, ByteSink& out) {
  const PrimeField& field = grid.field();
  for (std::uint64_t limb : field.modulus().limbs) out.u64(limb);
  out.u64(grid.rows());
  out.u64(grid.cols());
  out.u64(grid.selector_count());
  for (std::uint32_t s = 0; s < grid.selector_count(); ++s) {
    out.str(grid.selector_name(s));
    std::vector<std::uint8_t> bits((grid.rows() + 7) / 8, 0);
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      if (grid.selector(s, r)) bits[r / 8] |= static_cast<std::uint8_t>(1u << (r % 8));
    }
    out.bytes(bits);
  }
  out.u64(tables.size());
  for (const auto& t : tables) encode_table(field, t, out);
  out.u64(constraints.size());
  for (const auto& c : constraints) {
    out.u8(static_cast<std::uint8_t>(c.index()));
    if (const auto* eq = std::get_if<EqualityConstraint>(&c)) {
      encode_cell(eq->a, out);
      encode_cell(eq->b, out);
    } else if (const auto* lk = std::get_if<LookupConstraint>(&c)) {
      out.str(lk->name);
      out.u32(lk->selector);
      out.u32(lk->table);
      out.u64(lk->columns.size());
      for (auto col : lk->columns) out.u32(col);
    } else {
      const auto& g = std::get<GateConstraint>(c);
      out.str(g.name);
      out.u32(g.selector);
      out.u64(g.poly.terms().size());
      for (const auto& m : g.poly.terms()) {
        encode_fe(field, m.coeff, out);
        out.u64(m.columns.size());
        for (auto col : m.columns) out.u32(col);
      }
    }
  }
}

nlohmann::ordered_json dump_json(const Circuit& circuit) {
  using nlohmann::ordered_json;
  const Grid& grid = circuit.grid;
  const PrimeField& field = grid.field();
  ordered_json j;
  j["modulus"] = field.modulus().to_hex();
  j["rows"] = grid.rows();
  j["cols"] = grid.cols();

  ordered_json sels = ordered_json::array();
  for (std::uint32_t s = 0; s < grid.selector_count(); ++s) {
    ordered_json on = ordered_json::array();
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      if (grid.selector(s, r)) on.push_back(r);
    }
    sels.push_back({{"name", grid.selector_name(s)}, {"rows", on}});
  }
  j["selectors"] = sels;

  ordered_json cols = ordered_json::array();
  for (std::size_t c = 0; c < grid.cols(); ++c) {
    ordered_json col = ordered_json::array();
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      auto v = grid.get(Cell{static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
      col.push_back(v ? ordered_json(field.to_hex(*v)) : ordered_json(nullptr));
    }
    cols.push_back(col);
  }
  j["cells"] = cols;

  ordered_json tables = ordered_json::array();
  for (const auto& t : circuit.tables) {
    ordered_json tj;
    tj["name"] = t.name();
    tj["arity"] = t.arity();
    switch (t.kind()) {
      case LookupTable::Kind::kRange:
        tj["kind"] = "range";
        tj["bits"] = t.range_bits();
        tj["offset"] = t.range_offset();
        break;
      case LookupTable::Kind::kFunction:
        tj["kind"] = "function";
        tj["lo"] = t.domain_lo();
        tj["hi"] = t.domain_hi();
        break;
      case LookupTable::Kind::kExplicit: {
        tj["kind"] = "explicit";
        ordered_json rows = ordered_json::array();
        for (const auto& row : t.rows()) {
          ordered_json rj = ordered_json::array();
          for (const Fe& v : row) rj.push_back(field.to_hex(v));
          rows.push_back(rj);
        }
        tj["rows"] = rows;
        break;
      }
    }
    tables.push_back(tj);
  }
  j["tables"] = tables;

  ordered_json cons = ordered_json::array();
  for (const auto& c : circuit.constraints) {
    ordered_json cj;
    if (const auto* eq = std::get_if<EqualityConstraint>(&c)) {
      cj["kind"] = "equality";
      cj["a"] = {eq->a.row, eq->a.col};
      cj["b"] = {eq->b.row, eq->b.col};
    } else if (const auto* lk = std::get_if<LookupConstraint>(&c)) {
      cj["kind"] = "lookup";
      cj["name"] = lk->name;
      cj["selector"] = lk->selector;
      cj["columns"] = lk->columns;
      cj["table"] = lk->table;
    } else {
      const auto& g = std::get<GateConstraint>(c);
      cj["kind"] = "gate";
      cj["name"] = g.name;
      cj["selector"] = g.selector;
      ordered_json terms = ordered_json::array();
      for (const auto& m : g.poly.terms()) terms.push_back({{"coeff", field.to_hex(m.coeff)}, {"columns", m.columns}});
      cj["terms"] = terms;
    }
    cons.push_back(cj);
  }
  j["constraints"] = cons;
  return j;
}

}  // namespace zkaudit::air
