#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "zkaudit/air/builder.hpp"
#include "zkaudit/error.hpp"

using namespace zkaudit;
using air::Cell;
using air::CircuitBuilder;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no zkaudit::Error thrown";
  return Errc::kValidation;
}

std::vector<air::Operand> ops(const std::vector<Cell>& cells) { return {cells.begin(), cells.end()}; }

}  // namespace

TEST(Builder, SoftmaxToyCase) {
  fxp::FxpSpec spec;
  spec.scale_factor = 1000;
  CircuitBuilder b(spec);
  std::vector<Cell> xs{b.witness(fxp::quantize(std::log(0.5), spec).raw), b.witness(0)};
  auto sm = b.softmax(ops(xs));
  EXPECT_EQ(b.signed_value(sm.e[0]), 500);
  EXPECT_EQ(b.signed_value(sm.e[1]), 1000);
  EXPECT_EQ(b.signed_value(sm.s), 1500);
  EXPECT_EQ(b.signed_value(sm.y[0]), 333);
  EXPECT_EQ(b.signed_value(sm.y[1]), 667);
  auto raw = air::softmax_raw(std::vector<std::int64_t>{-693, 0}, spec);
  EXPECT_EQ(raw.e, (std::vector<std::int64_t>{500, 1000}));
  EXPECT_EQ(raw.s, 1500);
  EXPECT_EQ(raw.y, (std::vector<std::int64_t>{333, 667}));
  EXPECT_TRUE(std::move(b).build().check().empty());
}

TEST(Builder, SoftmaxMatchesRawOnRandomLogits) {
  fxp::FxpSpec spec;
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    CircuitBuilder b(spec);
    std::vector<std::int64_t> xs;
    std::vector<Cell> cells;
    for (int i = 0; i < 5; ++i) {
      xs.push_back(static_cast<std::int64_t>(rng() % 80000) - 40000);
      cells.push_back(b.witness(xs.back()));
    }
    auto sm = b.softmax(ops(cells));
    auto raw = air::softmax_raw(xs, spec);
    for (std::size_t i = 0; i < xs.size(); ++i) ASSERT_EQ(b.signed_value(sm.y[i]), raw.y[i]);
    ASSERT_TRUE(std::move(b).build().check().empty());
  }
}

TEST(Builder, RoundDivGadget) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  auto d = b.round_div(b.fresh(1000), b.fresh(7));
  EXPECT_EQ(b.signed_value(d.b), 143);
  EXPECT_EQ(b.signed_value(d.r), 2 * 1000 + 7 - 2 * 7 * 143);
  Cell s = b.round_div_signed(b.fresh(-1000), b.fresh(7));
  EXPECT_EQ(b.signed_value(s), -143);
  EXPECT_TRUE(std::move(b).build().check().empty());
}

TEST(Builder, RoundDivRejectsTieAlternative) {
  // a / c = 1/2: the honest quotient is 1 with r = 0; b' = 0 would need
  // r = 2c, which the slack 2c - r - 1 >= 0 excludes.
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  auto d = b.round_div(b.fresh(1), b.fresh(2));
  ASSERT_EQ(b.signed_value(d.b), 1);
  air::Circuit c = std::move(b).build();
  const auto& f = c.grid.field();
  std::uint32_t row = d.b.row;
  c.grid.assign({row, 2}, f.from_i64(0));
  c.grid.assign({row, 3}, f.from_i64(4));
  c.grid.assign({row, 4}, f.from_i64(-1));
  EXPECT_FALSE(c.check().empty());
}

TEST(Builder, RoundDivPreconditions) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  EXPECT_EQ(code_of([&] { b.round_div(b.fresh(1), b.fresh(0)); }), Errc::kDivisionByZero);
  EXPECT_EQ(code_of([&] { b.round_div(b.fresh(-1), b.fresh(3)); }), Errc::kRangeOverflow);
  EXPECT_EQ(code_of([&] { b.round_div(b.fresh(spec.product_limit()), b.fresh(3)); }), Errc::kRangeOverflow);
}

TEST(Builder, ArithmeticAndComparisons) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  Cell x = b.witness(12), y = b.witness(-5);
  EXPECT_EQ(b.signed_value(b.add(x, y)), 7);
  EXPECT_EQ(b.signed_value(b.sub(x, y)), 17);
  EXPECT_EQ(b.signed_value(b.mul(x, y)), -60);
  EXPECT_EQ(b.signed_value(b.max(x, y)), 12);
  EXPECT_EQ(b.signed_value(b.less_equal(y, x, 20)), 1);
  EXPECT_EQ(b.signed_value(b.less_equal(x, y, 20)), 0);
  EXPECT_EQ(b.signed_value(b.less_equal(x, x, 20)), 1);
  std::vector<Cell> many;
  for (int i = 1; i <= 40; ++i) many.push_back(b.witness(i));
  EXPECT_EQ(b.signed_value(b.sum_chain(ops(many))), 820);
  EXPECT_EQ(b.signed_value(b.max_fold(ops(many), 20)), 40);
  std::vector<Cell> ones(40, b.constant(2));
  EXPECT_EQ(b.signed_value(b.dot_bias(ops(many), ops(ones), b.fresh(5))), 1645);
  auto oh = b.one_hot(3, 6);
  for (std::size_t i = 0; i < oh.size(); ++i) EXPECT_EQ(b.signed_value(oh[i]), i == 3 ? 1 : 0);
  EXPECT_TRUE(std::move(b).build().check().empty());
}

TEST(Builder, SumWidthLimit) {
  CircuitBuilder b(fxp::FxpSpec{}, 10);
  std::vector<Cell> xs;
  for (int i = 0; i < 12; ++i) xs.push_back(b.witness(i));
  EXPECT_EQ(code_of([&] { b.sum(ops(xs)); }), Errc::kWidthExceeded);
  EXPECT_EQ(b.signed_value(b.sum_chain(ops(xs))), 66);
}

TEST(Builder, TablesAndDomainMiss) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  auto relu = b.relu6_table();
  EXPECT_EQ(b.signed_value(b.apply_table(relu, b.fresh(-5))), 0);
  EXPECT_EQ(b.signed_value(b.apply_table(relu, b.fresh(3 * spec.scale_factor))), 3 * spec.scale_factor);
  EXPECT_EQ(b.signed_value(b.apply_table(relu, b.fresh(9 * spec.scale_factor))), 6 * spec.scale_factor);
  EXPECT_EQ(b.range_check(std::vector<air::Operand>{b.fresh(255)}, 8).size(), 1u);
  EXPECT_TRUE(std::move(b).build().check().empty());

  CircuitBuilder fail(spec);
  EXPECT_EQ(code_of([&] { fail.apply_table(fail.exp_table(), fail.fresh(1)); }), Errc::kDomainMiss);
  EXPECT_EQ(code_of([&] { fail.range_check(std::vector<air::Operand>{fail.fresh(256)}, 8); }), Errc::kRangeOverflow);
  EXPECT_EQ(code_of([&] { fail.range_check(std::vector<air::Operand>{fail.fresh(-129)}, 8, true); }),
            Errc::kRangeOverflow);
}

TEST(Builder, PerturbationsAreCaught) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  std::vector<Cell> xs{b.witness(1200), b.witness(-3400), b.witness(800)};
  auto sm = b.softmax(ops(xs));
  b.round_div_signed(sm.y[0], b.fresh(3));
  air::Circuit c = std::move(b).build();
  ASSERT_TRUE(c.check().empty());
  const auto& f = c.grid.field();
  // Every cell placed in the first rows is referenced by some constraint.
  std::size_t caught = 0, tried = 0;
  for (std::uint32_t row = 0; row < 8; ++row) {
    for (std::uint32_t col = 0; col < c.grid.cols(); ++col) {
      if (!c.grid.is_assigned({row, col})) continue;
      air::Fe old = c.grid.value({row, col});
      c.grid.assign({row, col}, f.add(old, f.one()));
      ++tried;
      if (!c.check().empty()) ++caught;
      c.grid.assign({row, col}, old);
    }
  }
  EXPECT_GT(tried, 10u);
  EXPECT_EQ(caught, tried);
}

TEST(Builder, UnassignedCellThrows) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  auto d = b.round_div(b.fresh(10), b.fresh(3));
  air::Circuit c = std::move(b).build();
  c.grid.unassign(d.r);
  EXPECT_EQ(code_of([&] { c.check(); }), Errc::kUnassignedCell);
}

TEST(Builder, BuildPadsToPowerOfTwo) {
  CircuitBuilder b(fxp::FxpSpec{});
  for (int i = 0; i < 37; ++i) b.mul(b.fresh(i), b.fresh(i + 1));
  air::Circuit c = std::move(b).build();
  EXPECT_TRUE(air::is_power_of_two(c.grid.rows()));
  EXPECT_GE(c.grid.rows(), 37u);
}

TEST(Packing, PlanAndCapacity) {
  auto plan = air::plan_packing(5, 3, 64, 10);
  EXPECT_EQ(plan.first_row, 10u);
  ASSERT_EQ(plan.instances.size(), 3u);
  EXPECT_EQ(plan.instances[2], (air::RowRange{20, 25}));
  EXPECT_EQ(code_of([] { air::plan_packing(10, 7, 64, 0); }), Errc::kCapacityExceeded);
}

TEST(Packing, BuilderPackIsDisjointAndChecked) {
  fxp::FxpSpec spec;
  CircuitBuilder b(spec);
  std::vector<Cell> outs(4);
  auto layout = b.pack(4, [&](CircuitBuilder& bb, std::size_t i) {
    Cell x = bb.witness(static_cast<std::int64_t>(100 * (i + 1)));
    outs[i] = bb.round_div(x, bb.fresh(3)).b;
  });
  ASSERT_EQ(layout.instances.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GE(layout.instances[i].begin, layout.instances[i - 1].end);
  EXPECT_EQ(b.signed_value(outs[3]), 133);
  EXPECT_TRUE(std::move(b).build().check().empty());

  CircuitBuilder small(spec, air::kDefaultColumns, 0, 16);
  EXPECT_EQ(code_of([&] {
              small.pack(20, [&](CircuitBuilder& bb, std::size_t i) {
                bb.round_div(bb.fresh(static_cast<std::int64_t>(i)), bb.fresh(3));
              });
            }),
            Errc::kCapacityExceeded);
}

TEST(MockProver, ReportsGateAndLookupViolations) {
  auto field = air::PrimeField::bn254();
  air::Grid g(field, 4, 3);
  auto sel = g.add_selector("mul");
  g.set_selector(sel, 0);
  g.set_selector(sel, 1);
  g.assign_i64({0, 0}, 3);
  g.assign_i64({0, 1}, 4);
  g.assign_i64({0, 2}, 12);
  g.assign_i64({1, 0}, 3);
  g.assign_i64({1, 1}, 5);
  g.assign_i64({1, 2}, 300);
  air::Polynomial p;
  p.term(*field, 1, {0, 1}).term(*field, -1, {2});
  std::vector<air::Constraint> cs{air::GateConstraint{"mul", sel, p},
                                  air::LookupConstraint{"byte", sel, {2}, 0},
                                  air::EqualityConstraint{{0, 0}, {1, 0}}};
  std::vector<air::LookupTable> tables{air::LookupTable::range("u8", 8)};
  auto report = air::check_constraints(g, cs, tables);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report.violations[0].constraint, 0u);
  EXPECT_EQ(report.violations[0].row, 1u);
  EXPECT_EQ(report.violations[1].constraint, 1u);
  EXPECT_NE(report.summary().find("2 violation"), std::string::npos);
  g.assign_i64({1, 0}, 4);
  report = air::check_constraints(g, cs, tables);
  EXPECT_EQ(report.size(), 3u);
}

TEST(MockProver, ExplicitTableTooLarge) {
  auto field = air::PrimeField::bn254();
  air::Grid g(field, 2, 1);
  std::vector<std::vector<air::Fe>> rows;
  for (int i = 0; i < 3; ++i) rows.push_back({field->from_u64(i)});
  std::vector<air::LookupTable> tables{air::LookupTable::explicit_rows("t", 1, rows)};
  EXPECT_EQ(code_of([&] { air::check_constraints(g, {}, tables); }), Errc::kCapacityExceeded);
}

TEST(Lookup, TableKinds) {
  auto field = air::PrimeField::bn254();
  auto signed8 = air::LookupTable::range("s8", 8, 128);
  std::vector<air::Fe> t{field->from_i64(-128)};
  EXPECT_TRUE(signed8.contains(*field, t));
  t[0] = field->from_i64(128);
  EXPECT_FALSE(signed8.contains(*field, t));
  auto sq = air::LookupTable::function("sq", -3, 3, [](std::int64_t x) { return x * x; });
  EXPECT_EQ(sq.size(), 7u);
  EXPECT_EQ(sq.evaluate_i64(-2), 4);
  EXPECT_FALSE(sq.evaluate_i64(4).has_value());
  std::vector<air::Fe> pair{field->from_i64(-3), field->from_i64(9)};
  EXPECT_TRUE(sq.contains(*field, pair));
  pair[1] = field->from_i64(8);
  EXPECT_FALSE(sq.contains(*field, pair));
}
