#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/fxp.hpp"

namespace zkaudit::nn {

// A raw fixed-point value, plus the grid cell holding it when a circuit is
// being synthesized.
struct Wire {
  std::int64_t v = 0;
  std::optional<air::Cell> cell;
};

using Wires = std::vector<Wire>;

std::vector<std::int64_t> values(std::span<const Wire> ws);

// Arithmetic shared by plain fixed-point evaluation and witness synthesis.
// Every operation computes its result directly; when a builder is attached it
// also emits the matching gadget and checks that the witness agrees, so the
// two paths cannot drift apart.
class Ctx {
 public:
  explicit Ctx(const fxp::FxpSpec& spec, air::CircuitBuilder* builder = nullptr);

  const fxp::FxpSpec& spec() const { return spec_; }
  air::CircuitBuilder* builder() const { return b_; }

  // Private input.
  Wire input(std::int64_t v);
  Wires inputs(std::span<const std::int64_t> vs);
  Wire constant(std::int64_t v);

  Wire add(const Wire& a, const Wire& b);
  Wire sub(const Wire& a, const Wire& b);
  Wire mul(const Wire& a, const Wire& b);
  Wires add(std::span<const Wire> a, std::span<const Wire> b);
  Wires sub(std::span<const Wire> a, std::span<const Wire> b);
  Wires mul(std::span<const Wire> a, std::span<const Wire> b);
  // Every element times one shared wire.
  Wires scale(std::span<const Wire> a, const Wire& k);

  Wire sum(std::span<const Wire> xs);
  // bias + sum x_i y_i, with no rescaling.
  Wire dot(std::span<const Wire> xs, std::span<const Wire> ys, const Wire& bias);
  Wire dot(std::span<const Wire> xs, std::span<const Wire> ys);

  // Signed rounded division by a public positive constant.
  Wire rdiv(const Wire& a, std::int64_t c);
  Wires rdiv(std::span<const Wire> a, std::int64_t c);

  Wires relu6(std::span<const Wire> xs);
  Wires relu6_grad(std::span<const Wire> xs);
  Wires softmax(std::span<const Wire> xs);
  Wires one_hot(std::size_t index, std::size_t size);
  // [a <= b] for |a - b| < 2^bits.
  Wire less_equal(const Wire& a, const Wire& b, unsigned bits);
  // Asserts 0 <= x < 2^bits; kRangeOverflow otherwise.
  void range_check(std::span<const Wire> xs, unsigned bits);

 private:
  air::Operand op(const Wire& w) const;
  Wire from_cell(air::Cell c, std::int64_t expected) const;
  Wires binary(char kind, std::span<const Wire> a, std::span<const Wire> b);

  fxp::FxpSpec spec_;
  air::CircuitBuilder* b_;
};

}  // namespace zkaudit::nn
