#include "zkaudit/nn/context.hpp"

#include <algorithm>
#include <string>

#include "zkaudit/error.hpp"

namespace zkaudit::nn {
namespace {

std::int64_t checked(i128 v) {
  constexpr i128 kLimit = static_cast<i128>(1) << 62;
  if (v >= kLimit || v <= -kLimit) throw Error(Errc::kRangeOverflow, "intermediate value exceeds 2^62");
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::vector<std::int64_t> values(std::span<const Wire> ws) {
  std::vector<std::int64_t> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(w.v);
  return out;
}

Ctx::Ctx(const fxp::FxpSpec& spec, air::CircuitBuilder* builder) : spec_(spec), b_(builder) {
  if (b_ && !(b_->spec() == spec_)) throw Error(Errc::kInvalidArgument, "builder and context specs differ");
}

air::Operand Ctx::op(const Wire& w) const {
  if (w.cell) return air::Operand(*w.cell);
  return b_->fresh(w.v);
}

Wire Ctx::from_cell(air::Cell c, std::int64_t expected) const {
  std::int64_t got = b_->signed_value(c);
  if (got != expected) {
    throw Error(Errc::kUnsatisfiedWitness,
                "gadget produced " + std::to_string(got) + " where " + std::to_string(expected) + " was expected");
  }
  return Wire{got, c};
}

Wire Ctx::input(std::int64_t v) {
  if (!b_) return Wire{v, std::nullopt};
  return Wire{v, b_->witness(v)};
}

Wires Ctx::inputs(std::span<const std::int64_t> vs) {
  Wires out;
  out.reserve(vs.size());
  for (auto v : vs) out.push_back(input(v));
  return out;
}

Wire Ctx::constant(std::int64_t v) {
  if (!b_) return Wire{v, std::nullopt};
  return Wire{v, b_->constant(v)};
}

Wires Ctx::binary(char kind, std::span<const Wire> a, std::span<const Wire> b) {
  if (a.size() != b.size()) throw Error(Errc::kShapeMismatch, "elementwise operands differ in length");
  Wires out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    i128 x = a[i].v, y = b[i].v;
    out[i].v = checked(kind == '+' ? x + y : kind == '-' ? x - y : x * y);
  }
  if (b_ && !a.empty()) {
    std::vector<air::Operand> oa, ob;
    oa.reserve(a.size());
    ob.reserve(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      oa.push_back(op(a[i]));
      ob.push_back(op(b[i]));
    }
    auto cells = kind == '+' ? b_->add_many(oa, ob) : kind == '-' ? b_->sub_many(oa, ob) : b_->mul_many(oa, ob);
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = from_cell(cells[i], out[i].v);
  }
  return out;
}

Wire Ctx::add(const Wire& a, const Wire& b) { return binary('+', {&a, 1}, {&b, 1}).front(); }
Wire Ctx::sub(const Wire& a, const Wire& b) { return binary('-', {&a, 1}, {&b, 1}).front(); }
Wire Ctx::mul(const Wire& a, const Wire& b) { return binary('*', {&a, 1}, {&b, 1}).front(); }
Wires Ctx::add(std::span<const Wire> a, std::span<const Wire> b) { return binary('+', a, b); }
Wires Ctx::sub(std::span<const Wire> a, std::span<const Wire> b) { return binary('-', a, b); }
Wires Ctx::mul(std::span<const Wire> a, std::span<const Wire> b) { return binary('*', a, b); }

Wires Ctx::scale(std::span<const Wire> a, const Wire& k) {
  Wires ks(a.size(), k);
  return binary('*', a, ks);
}

Wire Ctx::sum(std::span<const Wire> xs) {
  i128 acc = 0;
  for (const auto& x : xs) acc += x.v;
  std::int64_t v = checked(acc);
  if (!b_) return Wire{v, std::nullopt};
  std::vector<air::Operand> ops;
  ops.reserve(xs.size());
  for (const auto& x : xs) ops.push_back(op(x));
  return from_cell(b_->sum_chain(ops), v);
}

Wire Ctx::dot(std::span<const Wire> xs, std::span<const Wire> ys, const Wire& bias) {
  if (xs.size() != ys.size()) throw Error(Errc::kShapeMismatch, "dot product operands differ in length");
  i128 acc = bias.v;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += static_cast<i128>(xs[i].v) * ys[i].v;
  std::int64_t v = checked(acc);
  if (!b_) return Wire{v, std::nullopt};
  std::vector<air::Operand> ox, oy;
  ox.reserve(xs.size());
  oy.reserve(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ox.push_back(op(xs[i]));
    oy.push_back(op(ys[i]));
  }
  return from_cell(b_->dot_bias(ox, oy, op(bias)), v);
}

Wire Ctx::dot(std::span<const Wire> xs, std::span<const Wire> ys) { return dot(xs, ys, constant(0)); }

Wire Ctx::rdiv(const Wire& a, std::int64_t c) {
  std::int64_t v = fxp::round_div(a.v, c, spec_);
  if (!b_) return Wire{v, std::nullopt};
  return from_cell(b_->round_div_signed(op(a), b_->constant(c)), v);
}

Wires Ctx::rdiv(std::span<const Wire> a, std::int64_t c) {
  Wires out;
  out.reserve(a.size());
  for (const auto& x : a) out.push_back(rdiv(x, c));
  return out;
}

Wires Ctx::relu6(std::span<const Wire> xs) {
  Wires out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fxp::check_range(xs[i].v, spec_);
    out[i].v = air::relu6_raw(xs[i].v, spec_);
  }
  if (b_ && !xs.empty()) {
    std::vector<air::Operand> ops;
    for (const auto& x : xs) ops.push_back(op(x));
    auto cells = b_->apply_table(b_->relu6_table(), ops);
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = from_cell(cells[i], out[i].v);
  }
  return out;
}

Wires Ctx::relu6_grad(std::span<const Wire> xs) {
  Wires out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fxp::check_range(xs[i].v, spec_);
    out[i].v = air::relu6_grad_raw(xs[i].v, spec_);
  }
  if (b_ && !xs.empty()) {
    std::vector<air::Operand> ops;
    for (const auto& x : xs) ops.push_back(op(x));
    auto cells = b_->apply_table(b_->relu6_grad_table(), ops);
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = from_cell(cells[i], out[i].v);
  }
  return out;
}

Wires Ctx::softmax(std::span<const Wire> xs) {
  for (const auto& x : xs) fxp::check_range(x.v, spec_);
  auto raw = air::softmax_raw(values(xs), spec_);
  Wires out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i].v = raw.y[i];
  if (b_) {
    std::vector<air::Operand> ops;
    for (const auto& x : xs) ops.push_back(op(x));
    auto cells = b_->softmax(ops);
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = from_cell(cells.y[i], out[i].v);
  }
  return out;
}

Wires Ctx::one_hot(std::size_t index, std::size_t size) {
  if (index >= size) {
    throw Error(Errc::kDomainMiss, "index " + std::to_string(index) + " outside [0, " + std::to_string(size) + ")");
  }
  Wires out(size);
  for (std::size_t i = 0; i < size; ++i) out[i].v = i == index ? 1 : 0;
  if (b_) {
    auto cells = b_->one_hot(index, size);
    for (std::size_t i = 0; i < size; ++i) out[i].cell = cells[i];
  }
  return out;
}

Wire Ctx::less_equal(const Wire& a, const Wire& b, unsigned bits) {
  i128 diff = static_cast<i128>(a.v) - b.v;
  i128 mag = diff < 0 ? -diff : diff;
  if (bits < 63 && mag >= (static_cast<i128>(1) << bits)) {
    throw Error(Errc::kRangeOverflow, "comparison operands differ by more than 2^" + std::to_string(bits));
  }
  std::int64_t v = a.v <= b.v ? 1 : 0;
  if (!b_) return Wire{v, std::nullopt};
  return from_cell(b_->less_equal(op(a), op(b), bits), v);
}

void Ctx::range_check(std::span<const Wire> xs, unsigned bits) {
  for (const auto& x : xs) {
    if (x.v < 0 || (bits < 63 && x.v >= (std::int64_t{1} << bits))) {
      throw Error(Errc::kRangeOverflow, std::to_string(x.v) + " outside [0, 2^" + std::to_string(bits) + ")");
    }
  }
  if (!b_ || xs.empty()) return;
  std::vector<air::Operand> ops;
  ops.reserve(xs.size());
  for (const auto& x : xs) ops.push_back(op(x));
  b_->range_check(ops, bits);
}

}  // namespace zkaudit::nn
