#include "zkaudit/air/lookup.hpp"

#include <cstring>

#include "zkaudit/error.hpp"

namespace zkaudit::air {
namespace {

std::string tuple_key(std::span<const Fe> tuple) {
  std::string key(tuple.size() * sizeof(Fe), '\0');
  for (std::size_t i = 0; i < tuple.size(); ++i) std::memcpy(key.data() + i * sizeof(Fe), tuple[i].m.data(), sizeof(Fe));
  return key;
}

}  // namespace

LookupTable LookupTable::explicit_rows(std::string name, std::size_t arity, std::vector<std::vector<Fe>> rows) {
  LookupTable t;
  t.kind_ = Kind::kExplicit;
  t.name_ = std::move(name);
  t.arity_ = arity;
  for (const auto& row : rows) {
    if (row.size() != arity) throw Error(Errc::kShapeMismatch, "table row arity mismatch in " + t.name_);
    if (!t.index_.insert(tuple_key(row)).second) throw Error(Errc::kInvalidArgument, "duplicate row in table " + t.name_);
  }
  t.rows_ = std::move(rows);
  return t;
}

LookupTable LookupTable::range(std::string name, unsigned bits, std::int64_t offset) {
  LookupTable t;
  t.kind_ = Kind::kRange;
  t.name_ = std::move(name);
  t.arity_ = 1;
  t.bits_ = bits;
  t.offset_ = offset;
  return t;
}

LookupTable LookupTable::function(std::string name, std::int64_t lo, std::int64_t hi,
                                  std::function<std::int64_t(std::int64_t)> fn) {
  if (lo > hi) throw Error(Errc::kInvalidArgument, "empty function table domain");
  LookupTable t;
  t.kind_ = Kind::kFunction;
  t.name_ = std::move(name);
  t.arity_ = 2;
  t.lo_ = lo;
  t.hi_ = hi;
  t.fn_ = std::move(fn);
  return t;
}

std::uint64_t LookupTable::size() const {
  switch (kind_) {
    case Kind::kExplicit: return rows_.size();
    case Kind::kRange: return bits_ >= 64 ? UINT64_MAX : (std::uint64_t{1} << bits_);
    case Kind::kFunction: return static_cast<std::uint64_t>(hi_ - lo_) + 1;
  }
  return 0;
}

bool LookupTable::contains(const PrimeField& field, std::span<const Fe> tuple) const {
  if (tuple.size() != arity_) return false;
  switch (kind_) {
    case Kind::kExplicit:
      return index_.count(tuple_key(tuple)) != 0;
    case Kind::kRange: {
      if (offset_ == 0) return field.below_pow2(tuple[0], bits_);
      return field.below_pow2(field.add(tuple[0], field.from_i64(offset_)), bits_);
    }
    case Kind::kFunction: {
      auto x = field.to_i64(tuple[0]);
      if (!x || *x < lo_ || *x > hi_) return false;
      return tuple[1] == field.from_i64(fn_(*x));
    }
  }
  return false;
}

std::optional<Fe> LookupTable::evaluate(const PrimeField& field, const Fe& x) const {
  if (arity_ != 2) throw Error(Errc::kInvalidArgument, "table " + name_ + " is not a 2-column relation");
  if (kind_ == Kind::kFunction) {
    auto xi = field.to_i64(x);
    if (!xi || *xi < lo_ || *xi > hi_) return std::nullopt;
    return field.from_i64(fn_(*xi));
  }
  for (const auto& row : rows_) {
    if (row[0] == x) return row[1];
  }
  return std::nullopt;
}

std::optional<std::int64_t> LookupTable::evaluate_i64(std::int64_t x) const {
  if (kind_ != Kind::kFunction) throw Error(Errc::kInvalidArgument, "evaluate_i64 needs a function table");
  if (x < lo_ || x > hi_) return std::nullopt;
  return fn_(x);
}

std::vector<Fe> LookupTable::filler(const PrimeField& field) const {
  switch (kind_) {
    case Kind::kExplicit:
      if (rows_.empty()) throw Error(Errc::kInvalidArgument, "empty table " + name_);
      return rows_.front();
    case Kind::kRange:
      return {field.from_i64(-offset_)};
    case Kind::kFunction:
      return {field.from_i64(lo_), field.from_i64(fn_(lo_))};
  }
  return {};
}

}  // namespace zkaudit::air

#include <algorithm>
#include <cmath>

namespace zkaudit::air {

std::int64_t relu6_raw(std::int64_t x, const fxp::FxpSpec& spec) {
  return std::clamp<std::int64_t>(x, 0, 6 * spec.scale_factor);
}

std::int64_t relu6_grad_raw(std::int64_t x, const fxp::FxpSpec& spec) {
  return (x > 0 && x < 6 * spec.scale_factor) ? 1 : 0;
}

std::int64_t exp_floor(const fxp::FxpSpec& spec) {
  long double sf = static_cast<long double>(spec.scale_factor);
  return -static_cast<std::int64_t>(std::ceil(sf * std::log(2.0L * sf)));
}

std::int64_t exp_raw(std::int64_t x, const fxp::FxpSpec& spec) {
  if (x > 0 || x < exp_floor(spec)) throw Error(Errc::kDomainMiss, "exp table input " + std::to_string(x) + " out of domain");
  long double sf = static_cast<long double>(spec.scale_factor);
  return std::llround(sf * std::exp(static_cast<long double>(x) / sf));
}

}  // namespace zkaudit::air
