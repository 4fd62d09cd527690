#include "zkaudit/fxp.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "zkaudit/error.hpp"

namespace zkaudit::fxp {

void FxpSpec::validate() const {
  if (range_bits < 1 || range_bits > 30) {
    throw Error(Errc::kValidation, "range_bits must lie in [1, 30], got " + std::to_string(range_bits));
  }
  if (scale_factor < 1 || scale_factor > range_limit()) {
    throw Error(Errc::kValidation, "scale factor must lie in [1, 2^N], got " + std::to_string(scale_factor));
  }
  if (field_modulus.bit_length() <= static_cast<unsigned>(2 * range_bits + 2)) {
    throw Error(Errc::kValidation, "field modulus must exceed 2^(2N+2)");
  }
}

FxpSpec recommender_spec() { return FxpSpec{}; }

FxpSpec classifier_spec() {
  FxpSpec spec;
  spec.scale_factor = std::int64_t{1} << 15;
  return spec;
}

void check_range(std::int64_t raw, const FxpSpec& spec) {
  if (raw >= spec.range_limit() || raw <= -spec.range_limit()) {
    throw Error(Errc::kRangeOverflow, "value " + std::to_string(raw) + " outside (-2^" +
                                          std::to_string(spec.range_bits) + ", 2^" +
                                          std::to_string(spec.range_bits) + ")");
  }
}

FxpScalar quantize(double x, const FxpSpec& spec) {
  double scaled = x * static_cast<double>(spec.scale_factor);
  if (!std::isfinite(scaled) || std::fabs(scaled) >= static_cast<double>(spec.range_limit())) {
    throw Error(Errc::kRangeOverflow, "cannot quantize " + std::to_string(x) + " at SF " +
                                          std::to_string(spec.scale_factor));
  }
  FxpScalar out{std::llround(scaled), spec};
  check_range(out.raw, spec);
  return out;
}

std::int64_t floor_div(std::int64_t a, std::int64_t c) {
  if (c == 0) throw Error(Errc::kDivisionByZero, "floor_div by zero");
  if (c < 0 || a < 0) throw Error(Errc::kRangeOverflow, "floor_div requires a >= 0 and c > 0");
  return a / c;
}

std::int64_t floor_div(std::int64_t a, std::int64_t c, const FxpSpec& spec) {
  if (c == 0) throw Error(Errc::kDivisionByZero, "floor_div by zero");
  if (a >= spec.product_limit() || c >= spec.range_limit()) {
    throw Error(Errc::kRangeOverflow, "floor_div operands exceed the division gadget range");
  }
  return floor_div(a, c);
}

std::int64_t round_div(std::int64_t a, std::int64_t c) {
  if (c == 0) throw Error(Errc::kDivisionByZero, "round_div by zero");
  if (c < 0) throw Error(Errc::kRangeOverflow, "round_div requires a positive divisor");
  if (a < 0) {
    if (a == INT64_MIN) throw Error(Errc::kRangeOverflow, "round_div dividend out of range");
    return -round_div(-a, c);
  }
  i128 num = 2 * static_cast<i128>(a) + c;
  return static_cast<std::int64_t>(num / (2 * static_cast<i128>(c)));
}

std::int64_t round_div(std::int64_t a, std::int64_t c, const FxpSpec& spec) {
  if (c == 0) throw Error(Errc::kDivisionByZero, "round_div by zero");
  if (c >= spec.range_limit() || a >= spec.product_limit() || a <= -spec.product_limit()) {
    throw Error(Errc::kRangeOverflow, "round_div(" + std::to_string(a) + ", " + std::to_string(c) +
                                          ") exceeds the division gadget range");
  }
  return round_div(a, c);
}

FxpScalar mul_rescale(const FxpScalar& a, const FxpScalar& b) {
  if (!(a.spec == b.spec)) throw Error(Errc::kInvalidArgument, "mul_rescale operands use different specs");
  i128 product = static_cast<i128>(a.raw) * b.raw;
  if (product >= a.spec.product_limit() || product <= -a.spec.product_limit()) {
    throw Error(Errc::kRangeOverflow, "mul_rescale product exceeds 2^(2N)");
  }
  FxpScalar out{round_div(static_cast<std::int64_t>(product), a.spec.scale_factor, a.spec), a.spec};
  check_range(out.raw, out.spec);
  return out;
}

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

FxpTensor::FxpTensor(std::vector<std::size_t> shape, const FxpSpec& spec)
    : shape_(std::move(shape)), raw_(element_count(shape_), 0), spec_(spec) {}

FxpTensor::FxpTensor(std::vector<std::size_t> shape, std::vector<std::int64_t> raw, const FxpSpec& spec)
    : shape_(std::move(shape)), raw_(std::move(raw)), spec_(spec) {
  if (raw_.size() != element_count(shape_)) {
    throw Error(Errc::kShapeMismatch, "tensor data size " + std::to_string(raw_.size()) +
                                          " does not match shape product " +
                                          std::to_string(element_count(shape_)));
  }
  for (std::int64_t v : raw_) check_range(v, spec_);
}

FxpTensor FxpTensor::from_real(std::vector<std::size_t> shape, std::span<const double> values, const FxpSpec& spec) {
  std::vector<std::int64_t> raw;
  raw.reserve(values.size());
  for (double v : values) raw.push_back(quantize(v, spec).raw);
  return FxpTensor(std::move(shape), std::move(raw), spec);
}

std::vector<double> FxpTensor::to_real() const {
  std::vector<double> out;
  out.reserve(raw_.size());
  for (std::int64_t v : raw_) out.push_back(static_cast<double>(v) / static_cast<double>(spec_.scale_factor));
  return out;
}

}  // namespace zkaudit::fxp
