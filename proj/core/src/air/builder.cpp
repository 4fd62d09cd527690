#include "zkaudit/air/builder.hpp"

#include <algorithm>
#include <cmath>

#include "zkaudit/error.hpp"

namespace zkaudit::air {
namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

}  // namespace

PackedLayout plan_packing(std::size_t rows_per_instance, std::size_t count, std::size_t grid_rows,
                          std::size_t table_rows) {
  if (!is_power_of_two(grid_rows)) throw Error(Errc::kInvalidArgument, "grid rows must be a power of two");
  if (table_rows > grid_rows || rows_per_instance * count > grid_rows - table_rows) {
    throw Error(Errc::kCapacityExceeded, std::to_string(count) + " instances of " + std::to_string(rows_per_instance) +
                                             " row(s) do not fit in " + std::to_string(grid_rows) + " rows after " +
                                             std::to_string(table_rows) + " table rows");
  }
  PackedLayout layout;
  layout.first_row = table_rows;
  layout.rows_per_instance = rows_per_instance;
  layout.grid_rows = grid_rows;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t begin = table_rows + i * rows_per_instance;
    layout.instances.push_back({begin, begin + rows_per_instance});
  }
  return layout;
}

CircuitBuilder::CircuitBuilder(const fxp::FxpSpec& spec, std::size_t columns, std::size_t reserved_rows,
                               std::size_t max_rows)
    : spec_(spec),
      field_((spec.validate(), PrimeField::get(spec.field_modulus))),
      cols_(columns),
      reserved_rows_(reserved_rows),
      max_rows_(max_rows),
      grid_(field_, next_pow2(std::max<std::size_t>(reserved_rows + 1, 16)), std::max(columns, kMinColumns)),
      next_row_(reserved_rows) {
  if (columns < kMinColumns) {
    throw Error(Errc::kInvalidArgument, "circuits need at least " + std::to_string(kMinColumns) + " columns");
  }
  if (reserved_rows > max_rows) throw Error(Errc::kCapacityExceeded, "reserved rows exceed the row budget");
}

void CircuitBuilder::ensure_capacity(std::size_t rows) {
  std::size_t target = grid_.rows();
  while (target < rows) target <<= 1;
  if (target != grid_.rows()) grid_.resize_rows(target);
}

std::uint32_t CircuitBuilder::allocate_row() {
  if (next_row_ + 1 > max_rows_) {
    throw Error(Errc::kCapacityExceeded, "circuit exceeds its budget of " + std::to_string(max_rows_) + " rows");
  }
  std::uint32_t row = u32(next_row_++);
  ensure_capacity(next_row_);
  return row;
}

void CircuitBuilder::put(std::uint32_t row, std::uint32_t col, const Fe& value) { grid_.assign(Cell{row, col}, value); }

Cell CircuitBuilder::place(std::uint32_t row, std::uint32_t col, const Operand& op) {
  Cell dst{row, col};
  if (op.is_cell()) {
    grid_.assign(dst, grid_.value(op.cell()));
    constraints_.emplace_back(EqualityConstraint{op.cell(), dst});
  } else {
    grid_.assign(dst, op.fresh_value());
  }
  return dst;
}

std::uint32_t CircuitBuilder::family(const std::string& key, const std::function<void(std::uint32_t)>& define) {
  auto it = families_.find(key);
  if (it != families_.end()) return it->second.selector;
  std::uint32_t sel = grid_.add_selector(key);
  families_.emplace(key, Family{sel});
  define(sel);
  return sel;
}

void CircuitBuilder::add_gate(std::string name, std::uint32_t selector, Polynomial poly) {
  constraints_.emplace_back(GateConstraint{std::move(name), selector, std::move(poly)});
}

void CircuitBuilder::add_lookup(std::string name, std::uint32_t selector, std::vector<std::uint32_t> columns,
                                std::uint32_t table) {
  constraints_.emplace_back(LookupConstraint{std::move(name), selector, std::move(columns), table});
}

std::int64_t CircuitBuilder::signed_value(Cell cell) const {
  auto v = field_->to_i64(grid_.value(cell));
  if (!v) throw Error(Errc::kRangeOverflow, "cell value is not a small signed integer");
  return *v;
}

std::int64_t CircuitBuilder::signed_value(const Operand& op) const {
  if (op.is_cell()) return signed_value(op.cell());
  auto v = field_->to_i64(op.fresh_value());
  if (!v) throw Error(Errc::kRangeOverflow, "operand is not a small signed integer");
  return *v;
}

Cell CircuitBuilder::witness_fe(const Fe& value) {
  if (!witness_row_open_ || witness_col_ == cols_) {
    witness_row_ = allocate_row();
    witness_col_ = 0;
    witness_row_open_ = true;
  }
  Cell cell{witness_row_, witness_col_++};
  grid_.assign(cell, value);
  return cell;
}

Cell CircuitBuilder::witness(std::int64_t value) { return witness_fe(field_->from_i64(value)); }

Cell CircuitBuilder::constant(std::int64_t value) {
  auto it = constants_.find(value);
  if (it != constants_.end()) return it->second;
  std::string key = "const:" + std::to_string(value);
  std::uint32_t sel = family(key, [&](std::uint32_t s) {
    Polynomial p;
    p.term(*field_, 1, {0}).term(*field_, -value, {});
    add_gate(key, s, std::move(p));
  });
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  put(row, 0, field_->from_i64(value));
  Cell cell{row, 0};
  constants_.emplace(value, cell);
  return cell;
}

void CircuitBuilder::assert_equal(Cell a, Cell b) { constraints_.emplace_back(EqualityConstraint{a, b}); }

Cell CircuitBuilder::sum(std::span<const Operand> xs) {
  std::size_t k = xs.size();
  if (k > cols_ - 1) {
    throw Error(Errc::kWidthExceeded, "sum of " + std::to_string(k) + " cells exceeds row width " + std::to_string(cols_));
  }
  std::string key = "sum/" + std::to_string(k);
  std::uint32_t sel = family(key, [&](std::uint32_t s) {
    Polynomial p;
    p.term(*field_, 1, {u32(k)});
    for (std::size_t i = 0; i < k; ++i) p.term(*field_, -1, {u32(i)});
    add_gate(key, s, std::move(p));
  });
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  Fe acc = field_->zero();
  for (std::size_t i = 0; i < k; ++i) acc = field_->add(acc, grid_.value(place(row, u32(i), xs[i])));
  put(row, u32(k), acc);
  return Cell{row, u32(k)};
}

Cell CircuitBuilder::sum_chain(std::span<const Operand> xs) {
  std::size_t width = cols_ - 1;
  if (xs.size() <= width) return sum(xs);
  Cell acc = sum(xs.subspan(0, width));
  std::size_t pos = width;
  while (pos < xs.size()) {
    std::size_t take = std::min(width - 1, xs.size() - pos);
    std::vector<Operand> chunk;
    chunk.reserve(take + 1);
    chunk.emplace_back(acc);
    for (std::size_t i = 0; i < take; ++i) chunk.push_back(xs[pos + i]);
    acc = sum(chunk);
    pos += take;
  }
  return acc;
}

Cell CircuitBuilder::dot_bias(std::span<const Operand> xs, std::span<const Operand> ys, const Operand& bias) {
  if (xs.size() != ys.size()) {
    throw Error(Errc::kShapeMismatch, "dot product of lengths " + std::to_string(xs.size()) + " and " +
                                          std::to_string(ys.size()));
  }
  std::size_t n = dot_terms_per_row();
  Operand carry = bias;
  std::size_t pos = 0;
  do {
    std::size_t k = std::min(n, xs.size() - pos);
    std::string key = "dot/" + std::to_string(k);
    std::uint32_t sel = family(key, [&](std::uint32_t s) {
      Polynomial p;
      p.term(*field_, 1, {u32(2 * k + 1)}).term(*field_, -1, {u32(2 * k)});
      for (std::size_t i = 0; i < k; ++i) p.term(*field_, -1, {u32(i), u32(k + i)});
      add_gate(key, s, std::move(p));
    });
    std::uint32_t row = allocate_row();
    grid_.set_selector(sel, row);
    Fe acc = grid_.value(place(row, u32(2 * k), carry));
    for (std::size_t i = 0; i < k; ++i) {
      Fe x = grid_.value(place(row, u32(i), xs[pos + i]));
      Fe y = grid_.value(place(row, u32(k + i), ys[pos + i]));
      acc = field_->add(acc, field_->mul(x, y));
    }
    put(row, u32(2 * k + 1), acc);
    carry = Cell{row, u32(2 * k + 1)};
    pos += k;
  } while (pos < xs.size());
  return carry.cell();
}

std::vector<Cell> CircuitBuilder::apply_table(std::uint32_t table, std::span<const Operand> xs) {
  if (table >= tables_.size()) throw Error(Errc::kInvalidArgument, "unknown table id");
  const std::size_t pairs = cols_ / 2;
  std::vector<Cell> out;
  out.reserve(xs.size());
  for (std::size_t pos = 0; pos < xs.size(); pos += pairs) {
    std::size_t k = std::min(pairs, xs.size() - pos);
    std::string key = "lut:" + tables_[table].name() + "/" + std::to_string(k);
    std::uint32_t sel = family(key, [&](std::uint32_t s) {
      for (std::size_t j = 0; j < k; ++j) add_lookup(key, s, {u32(2 * j), u32(2 * j + 1)}, table);
    });
    std::uint32_t row = allocate_row();
    grid_.set_selector(sel, row);
    for (std::size_t j = 0; j < k; ++j) {
      Fe x = grid_.value(place(row, u32(2 * j), xs[pos + j]));
      auto y = tables_[table].evaluate(*field_, x);
      if (!y) {
        throw Error(Errc::kDomainMiss, "value " + field_->to_hex(x) + " outside the domain of " + tables_[table].name());
      }
      put(row, u32(2 * j + 1), *y);
      out.push_back(Cell{row, u32(2 * j + 1)});
    }
  }
  return out;
}

Cell CircuitBuilder::apply_table(std::uint32_t table, const Operand& x) {
  return apply_table(table, std::span<const Operand>(&x, 1)).front();
}

std::vector<Cell> CircuitBuilder::range_check(std::span<const Operand> xs, unsigned bits, bool is_signed) {
  std::uint32_t table = range_table(bits, is_signed);
  for (const auto& x : xs) {
    Fe v = x.is_cell() ? grid_.value(x.cell()) : x.fresh_value();
    if (!tables_[table].contains(*field_, std::span<const Fe>(&v, 1))) {
      throw Error(Errc::kRangeOverflow, "value " + field_->to_hex(v) + " outside " + tables_[table].name());
    }
  }
  std::vector<Cell> out;
  out.reserve(xs.size());
  for (std::size_t pos = 0; pos < xs.size(); pos += cols_) {
    std::size_t k = std::min(cols_, xs.size() - pos);
    std::string key = "range:" + tables_[table].name() + "/" + std::to_string(k);
    std::uint32_t sel = family(key, [&](std::uint32_t s) {
      for (std::size_t j = 0; j < k; ++j) add_lookup(key, s, {u32(j)}, table);
    });
    std::uint32_t row = allocate_row();
    grid_.set_selector(sel, row);
    for (std::size_t j = 0; j < k; ++j) out.push_back(place(row, u32(j), xs[pos + j]));
  }
  return out;
}

CircuitBuilder::DivCells CircuitBuilder::round_div(const Operand& a, const Operand& c) {
  const unsigned n = static_cast<unsigned>(spec_.range_bits);
  std::int64_t av = signed_value(a);
  std::int64_t cv = signed_value(c);
  if (cv == 0) throw Error(Errc::kDivisionByZero, "round_div gadget with c = 0");
  if (av < 0 || av >= spec_.product_limit() || cv < 1 || cv >= spec_.range_limit()) {
    throw Error(Errc::kRangeOverflow, "round_div gadget operands a=" + std::to_string(av) + " c=" + std::to_string(cv) +
                                          " outside 0 <= a < 2^(2N), 1 <= c < 2^N");
  }
  std::uint32_t half = range_table(n);
  std::uint32_t full = range_table(2 * n);
  std::uint32_t sel = family("rdiv", [&](std::uint32_t s) {
    const PrimeField& f = *field_;
    Polynomial eq2;
    eq2.term(f, 2, {0}).term(f, 1, {1}).term(f, -2, {1, 2}).term(f, -1, {3});
    add_gate("rdiv:2a+c=2cb+r", s, std::move(eq2));
    Polynomial slack;
    slack.term(f, 1, {4}).term(f, -2, {1}).term(f, 1, {3}).term(f, 1, {});
    add_gate("rdiv:t=2c-r-1", s, std::move(slack));
    Polynomial cm1;
    cm1.term(f, 1, {5}).term(f, -1, {1}).term(f, 1, {});
    add_gate("rdiv:c-1", s, std::move(cm1));
    add_lookup("rdiv:a", s, {0}, full);
    add_lookup("rdiv:b", s, {2}, half);
    add_lookup("rdiv:c", s, {1}, half);
    add_lookup("rdiv:r", s, {3}, full);
    add_lookup("rdiv:2c-r-1", s, {4}, full);
    add_lookup("rdiv:c-1", s, {5}, half);
  });
  std::int64_t b = fxp::round_div(av, cv);
  std::int64_t r = 2 * av + cv - 2 * cv * b;
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  place(row, 0, a);
  place(row, 1, c);
  put(row, 2, field_->from_i64(b));
  put(row, 3, field_->from_i64(r));
  put(row, 4, field_->from_i64(2 * cv - r - 1));
  put(row, 5, field_->from_i64(cv - 1));
  return DivCells{Cell{row, 2}, Cell{row, 3}};
}

Cell CircuitBuilder::round_div_signed(const Operand& a, const Operand& c) {
  const unsigned n = static_cast<unsigned>(spec_.range_bits);
  std::int64_t av = signed_value(a);
  std::int64_t cv = signed_value(c);
  if (cv == 0) throw Error(Errc::kDivisionByZero, "signed round_div gadget with c = 0");
  if (av >= spec_.product_limit() || av <= -spec_.product_limit() || cv < 1 || cv >= spec_.range_limit()) {
    throw Error(Errc::kRangeOverflow, "signed round_div gadget operands a=" + std::to_string(av) +
                                          " c=" + std::to_string(cv) + " outside |a| < 2^(2N), 1 <= c < 2^N");
  }
  std::uint32_t bit = range_table(1);
  std::uint32_t half = range_table(n);
  std::uint32_t full = range_table(2 * n);
  std::uint32_t sel = family("sdiv", [&](std::uint32_t s) {
    const PrimeField& f = *field_;
    Polynomial sign_in;
    sign_in.term(f, 1, {0}).term(f, -1, {2}).term(f, 2, {1, 2});
    add_gate("sdiv:a=(1-2s)m", s, std::move(sign_in));
    Polynomial eq2;
    eq2.term(f, 2, {2}).term(f, 1, {3}).term(f, -2, {3, 4}).term(f, -1, {5});
    add_gate("sdiv:2m+c=2c*bm+r", s, std::move(eq2));
    Polynomial slack;
    slack.term(f, 1, {6}).term(f, -2, {3}).term(f, 1, {5}).term(f, 1, {});
    add_gate("sdiv:t=2c-r-1", s, std::move(slack));
    Polynomial sign_out;
    sign_out.term(f, 1, {7}).term(f, -1, {4}).term(f, 2, {1, 4});
    add_gate("sdiv:b=(1-2s)bm", s, std::move(sign_out));
    Polynomial cm1;
    cm1.term(f, 1, {8}).term(f, -1, {3}).term(f, 1, {});
    add_gate("sdiv:c-1", s, std::move(cm1));
    add_lookup("sdiv:s", s, {1}, bit);
    add_lookup("sdiv:m", s, {2}, full);
    add_lookup("sdiv:c", s, {3}, half);
    add_lookup("sdiv:bm", s, {4}, half);
    add_lookup("sdiv:r", s, {5}, full);
    add_lookup("sdiv:2c-r-1", s, {6}, full);
    add_lookup("sdiv:c-1", s, {8}, half);
  });
  std::int64_t sign = av < 0 ? 1 : 0;
  std::int64_t mag = av < 0 ? -av : av;
  std::int64_t bm = fxp::round_div(mag, cv);
  std::int64_t r = 2 * mag + cv - 2 * cv * bm;
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  place(row, 0, a);
  put(row, 1, field_->from_i64(sign));
  put(row, 2, field_->from_i64(mag));
  place(row, 3, c);
  put(row, 4, field_->from_i64(bm));
  put(row, 5, field_->from_i64(r));
  put(row, 6, field_->from_i64(2 * cv - r - 1));
  put(row, 7, field_->from_i64(sign ? -bm : bm));
  put(row, 8, field_->from_i64(cv - 1));
  return Cell{row, 7};
}

Cell CircuitBuilder::max(const Operand& a, const Operand& b, unsigned bits) {
  std::int64_t av = signed_value(a);
  std::int64_t bv = signed_value(b);
  std::int64_t cv = std::max(av, bv);
  std::int64_t limit_check = std::max(cv - av, cv - bv);
  if (bits < 63 && limit_check >= (std::int64_t{1} << bits)) {
    throw Error(Errc::kRangeOverflow, "max gadget operands differ by more than 2^" + std::to_string(bits));
  }
  std::uint32_t table = range_table(bits);
  std::string key = "max/" + std::to_string(bits);
  std::uint32_t sel = family(key, [&](std::uint32_t s) {
    const PrimeField& f = *field_;
    Polynomial pick;
    pick.term(f, 1, {2, 2}).term(f, -1, {2, 0}).term(f, -1, {2, 1}).term(f, 1, {0, 1});
    add_gate(key + ":(c-a)(c-b)", s, std::move(pick));
    Polynomial da;
    da.term(f, 1, {3}).term(f, -1, {2}).term(f, 1, {0});
    add_gate(key + ":c-a", s, std::move(da));
    Polynomial db;
    db.term(f, 1, {4}).term(f, -1, {2}).term(f, 1, {1});
    add_gate(key + ":c-b", s, std::move(db));
    add_lookup(key + ":c-a", s, {3}, table);
    add_lookup(key + ":c-b", s, {4}, table);
  });
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  place(row, 0, a);
  place(row, 1, b);
  put(row, 2, field_->from_i64(cv));
  put(row, 3, field_->from_i64(cv - av));
  put(row, 4, field_->from_i64(cv - bv));
  return Cell{row, 2};
}

Cell CircuitBuilder::max_fold(std::span<const Operand> xs, unsigned bits) {
  if (xs.empty()) throw Error(Errc::kInvalidArgument, "max of an empty vector");
  if (xs.size() == 1) return xs[0].is_cell() ? xs[0].cell() : witness_fe(xs[0].fresh_value());
  Cell acc = max(xs[0], xs[1], bits);
  for (std::size_t i = 2; i < xs.size(); ++i) acc = max(acc, xs[i], bits);
  return acc;
}

std::vector<Cell> CircuitBuilder::binary_many(const char* op, std::span<const Operand> a, std::span<const Operand> b) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, std::string(op) + " operand lengths differ");
  const std::string opname(op);
  const std::size_t per_row = cols_ / 3;
  std::vector<Cell> out;
  out.reserve(a.size());
  for (std::size_t pos = 0; pos < a.size(); pos += per_row) {
    std::size_t k = std::min(per_row, a.size() - pos);
    std::string key = opname + "/" + std::to_string(k);
    std::uint32_t sel = family(key, [&](std::uint32_t s) {
      const PrimeField& f = *field_;
      for (std::size_t j = 0; j < k; ++j) {
        std::uint32_t x = u32(3 * j), y = x + 1, z = x + 2;
        Polynomial p;
        p.term(f, 1, {z});
        if (opname == "add") {
          p.term(f, -1, {x}).term(f, -1, {y});
        } else if (opname == "sub") {
          p.term(f, -1, {x}).term(f, 1, {y});
        } else {
          p.term(f, -1, {x, y});
        }
        add_gate(key, s, std::move(p));
      }
    });
    std::uint32_t row = allocate_row();
    grid_.set_selector(sel, row);
    for (std::size_t j = 0; j < k; ++j) {
      Fe x = grid_.value(place(row, u32(3 * j), a[pos + j]));
      Fe y = grid_.value(place(row, u32(3 * j + 1), b[pos + j]));
      Fe z = opname == "add" ? field_->add(x, y) : opname == "sub" ? field_->sub(x, y) : field_->mul(x, y);
      put(row, u32(3 * j + 2), z);
      out.push_back(Cell{row, u32(3 * j + 2)});
    }
  }
  return out;
}

std::vector<Cell> CircuitBuilder::add_many(std::span<const Operand> a, std::span<const Operand> b) {
  return binary_many("add", a, b);
}
std::vector<Cell> CircuitBuilder::sub_many(std::span<const Operand> a, std::span<const Operand> b) {
  return binary_many("sub", a, b);
}
std::vector<Cell> CircuitBuilder::mul_many(std::span<const Operand> a, std::span<const Operand> b) {
  return binary_many("mul", a, b);
}

Cell CircuitBuilder::add(const Operand& a, const Operand& b) {
  return binary_many("add", std::span<const Operand>(&a, 1), std::span<const Operand>(&b, 1)).front();
}
Cell CircuitBuilder::sub(const Operand& a, const Operand& b) {
  return binary_many("sub", std::span<const Operand>(&a, 1), std::span<const Operand>(&b, 1)).front();
}
Cell CircuitBuilder::mul(const Operand& a, const Operand& b) {
  return binary_many("mul", std::span<const Operand>(&a, 1), std::span<const Operand>(&b, 1)).front();
}

Cell CircuitBuilder::less_equal(const Operand& a, const Operand& b, unsigned bits) {
  std::int64_t av = signed_value(a);
  std::int64_t bv = signed_value(b);
  std::int64_t bit = av <= bv ? 1 : 0;
  std::int64_t t = bit ? bv - av : av - bv - 1;
  if (bits < 63 && t >= (std::int64_t{1} << bits)) {
    throw Error(Errc::kRangeOverflow, "comparison operands differ by more than 2^" + std::to_string(bits));
  }
  std::uint32_t bit_table = range_table(1);
  std::uint32_t slack_table = range_table(bits);
  std::string key = "le/" + std::to_string(bits);
  std::uint32_t sel = family(key, [&](std::uint32_t s) {
    const PrimeField& f = *field_;
    Polynomial p;
    p.term(f, 1, {3}).term(f, -2, {2, 1}).term(f, 2, {2, 0}).term(f, 1, {1}).term(f, -1, {0}).term(f, -1, {2}).term(f, 1, {});
    add_gate(key + ":slack", s, std::move(p));
    add_lookup(key + ":bit", s, {2}, bit_table);
    add_lookup(key + ":slack", s, {3}, slack_table);
  });
  std::uint32_t row = allocate_row();
  grid_.set_selector(sel, row);
  place(row, 0, a);
  place(row, 1, b);
  put(row, 2, field_->from_i64(bit));
  put(row, 3, field_->from_i64(t));
  return Cell{row, 2};
}

SoftmaxRaw softmax_raw(std::span<const std::int64_t> xs, const fxp::FxpSpec& spec) {
  if (xs.empty()) throw Error(Errc::kInvalidArgument, "softmax of an empty vector");
  SoftmaxRaw out;
  std::int64_t m = *std::max_element(xs.begin(), xs.end());
  std::int64_t lo = exp_floor(spec);
  for (std::int64_t x : xs) {
    out.e.push_back(exp_raw(std::max(x - m, lo), spec));
    out.s += out.e.back();
  }
  for (std::int64_t e : out.e) out.y.push_back(fxp::round_div(spec.scale_factor * e, out.s, spec));
  return out;
}

CircuitBuilder::SoftmaxCells CircuitBuilder::softmax(std::span<const Operand> xs) {
  if (xs.empty()) throw Error(Errc::kInvalidArgument, "softmax of an empty vector");
  const unsigned n = static_cast<unsigned>(spec_.range_bits);
  Cell m = max_fold(xs, n + 1);
  std::vector<Operand> ms(xs.size(), Operand(m));
  std::vector<Cell> d = sub_many(xs, ms);
  Cell lo = constant(exp_floor());
  std::vector<Operand> clamped;
  clamped.reserve(d.size());
  for (Cell di : d) clamped.emplace_back(max(di, lo, n + 2));
  SoftmaxCells out;
  out.e = apply_table(exp_table(), clamped);
  std::vector<Operand> es(out.e.begin(), out.e.end());
  out.s = sum_chain(es);
  Cell sf = constant(spec_.scale_factor);
  std::vector<Operand> sfs(es.size(), Operand(sf));
  std::vector<Cell> scaled = mul_many(es, sfs);
  for (Cell a : scaled) out.y.push_back(round_div(a, out.s).b);
  return out;
}

std::vector<Cell> CircuitBuilder::one_hot(std::size_t index, std::size_t size) {
  if (index >= size) {
    throw Error(Errc::kDomainMiss, "one-hot index " + std::to_string(index) + " outside [0, " + std::to_string(size) + ")");
  }
  std::vector<Operand> fresh_bits;
  fresh_bits.reserve(size);
  for (std::size_t i = 0; i < size; ++i) fresh_bits.push_back(fresh(i == index ? 1 : 0));
  std::vector<Cell> bits = range_check(fresh_bits, 1);
  std::vector<Operand> ops(bits.begin(), bits.end());
  Cell total = sum_chain(ops);
  assert_equal(total, constant(1));
  return bits;
}

std::uint32_t CircuitBuilder::add_table(LookupTable table) {
  auto it = table_ids_.find(table.name());
  if (it != table_ids_.end()) return it->second;
  if (table.kind() == LookupTable::Kind::kExplicit && table.size() > reserved_rows_) {
    throw Error(Errc::kCapacityExceeded, "explicit table " + table.name() + " needs " + std::to_string(table.size()) +
                                             " rows but only " + std::to_string(reserved_rows_) + " are reserved");
  }
  if (table.kind() == LookupTable::Kind::kRange && table.range_bits() + 1 >= field_->modulus_bits()) {
    throw Error(Errc::kInvalidArgument, "range table wider than the field");
  }
  auto id = u32(tables_.size());
  table_ids_.emplace(table.name(), id);
  tables_.push_back(std::move(table));
  return id;
}

std::uint32_t CircuitBuilder::range_table(unsigned bits, bool is_signed) {
  if (bits == 0 || bits > 250) throw Error(Errc::kInvalidArgument, "unsupported range width");
  if (is_signed) {
    if (bits > 63) throw Error(Errc::kInvalidArgument, "signed range tables are limited to 63 bits");
    std::string name = "srange/" + std::to_string(bits);
    if (auto it = table_ids_.find(name); it != table_ids_.end()) return it->second;
    return add_table(LookupTable::range(name, bits, std::int64_t{1} << (bits - 1)));
  }
  std::string name = "range/" + std::to_string(bits);
  if (auto it = table_ids_.find(name); it != table_ids_.end()) return it->second;
  return add_table(LookupTable::range(name, bits));
}

std::uint32_t CircuitBuilder::relu6_table() {
  std::string name = "relu6/sf=" + std::to_string(spec_.scale_factor) + "/n=" + std::to_string(spec_.range_bits);
  if (auto it = table_ids_.find(name); it != table_ids_.end()) return it->second;
  fxp::FxpSpec spec = spec_;
  std::int64_t lim = spec_.range_limit() - 1;
  return add_table(LookupTable::function(name, -lim, lim, [spec](std::int64_t x) { return relu6_raw(x, spec); }));
}

std::uint32_t CircuitBuilder::relu6_grad_table() {
  std::string name = "relu6grad/sf=" + std::to_string(spec_.scale_factor) + "/n=" + std::to_string(spec_.range_bits);
  if (auto it = table_ids_.find(name); it != table_ids_.end()) return it->second;
  fxp::FxpSpec spec = spec_;
  std::int64_t lim = spec_.range_limit() - 1;
  return add_table(LookupTable::function(name, -lim, lim, [spec](std::int64_t x) { return relu6_grad_raw(x, spec); }));
}

std::int64_t CircuitBuilder::exp_floor() const { return air::exp_floor(spec_); }

std::uint32_t CircuitBuilder::exp_table() {
  std::string name = "exp/sf=" + std::to_string(spec_.scale_factor);
  if (auto it = table_ids_.find(name); it != table_ids_.end()) return it->second;
  fxp::FxpSpec spec = spec_;
  return add_table(LookupTable::function(name, exp_floor(), 0, [spec](std::int64_t x) { return exp_raw(x, spec); }));
}

PackedLayout CircuitBuilder::pack(std::size_t count,
                                  const std::function<void(CircuitBuilder&, std::size_t)>& instance) {
  PackedLayout layout;
  layout.first_row = next_row_;
  layout.grid_rows = max_rows_;
  if (count == 0) return layout;
  witness_row_open_ = false;
  std::size_t start = next_row_;
  instance(*this, 0);
  witness_row_open_ = false;
  std::size_t per = next_row_ - start;
  std::size_t budget = max_rows_ == kUnboundedRows ? next_pow2(start + per * count) : max_rows_;
  PackedLayout plan = plan_packing(per, count, budget, start);
  for (std::size_t i = 1; i < count; ++i) {
    std::size_t begin = next_row_;
    instance(*this, i);
    witness_row_open_ = false;
    if (next_row_ - begin > per) {
      throw Error(Errc::kInvalidArgument, "packed instance " + std::to_string(i) + " used " +
                                              std::to_string(next_row_ - begin) + " rows, expected " +
                                              std::to_string(per));
    }
    // Shared cells such as constants are allocated once, so later instances
    // may come up short; pad them to keep the row plan uniform.
    while (next_row_ - begin < per) allocate_row();
  }
  return plan;
}

Circuit CircuitBuilder::build() && {
  std::size_t rows = next_pow2(std::max<std::size_t>(next_row_, 1));
  grid_.resize_rows(rows);
  return Circuit{std::move(grid_), std::move(constraints_), std::move(tables_)};
}

}  // namespace zkaudit::air
