#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zkaudit/u256.hpp"

namespace zkaudit::fxp {

// Parameters shared by every fixed-point value and by the circuits that
// check them: reals are represented as raw / scale_factor with |raw| < 2^N,
// and all arithmetic is eventually embedded in F_q.
struct FxpSpec {
  std::int64_t scale_factor = std::int64_t{1} << 13;
  int range_bits = 20;
  U256 field_modulus = kBn254ScalarModulus;

  // Throws Error(kValidation) unless 1 <= SF <= 2^N, 1 <= N <= 30 and
  // 2^(2N+2) < q.
  void validate() const;

  std::int64_t range_limit() const { return std::int64_t{1} << range_bits; }
  std::int64_t product_limit() const { return std::int64_t{1} << (2 * range_bits); }

  friend bool operator==(const FxpSpec&, const FxpSpec&) = default;
};

// Recommender default (2^13) and classifier default (2^15).
FxpSpec recommender_spec();
FxpSpec classifier_spec();

struct FxpScalar {
  std::int64_t raw = 0;
  FxpSpec spec;

  double to_real() const { return static_cast<double>(raw) / static_cast<double>(spec.scale_factor); }
};

// Nearest integer to x * SF, ties away from zero.
FxpScalar quantize(double x, const FxpSpec& spec);

// floor(a / c) for a >= 0, c >= 1.
std::int64_t floor_div(std::int64_t a, std::int64_t c);
// Same, additionally enforcing a < 2^(2N) and c < 2^N.
std::int64_t floor_div(std::int64_t a, std::int64_t c, const FxpSpec& spec);

// Rounded division: floor((2a + c) / 2c) for a >= 0, sign-symmetric for
// a < 0 (half away from zero). c must be positive.
std::int64_t round_div(std::int64_t a, std::int64_t c);
// Same, enforcing |a| < 2^(2N) and c < 2^N (the in-circuit preconditions).
std::int64_t round_div(std::int64_t a, std::int64_t c, const FxpSpec& spec);

// raw = round_div(a.raw * b.raw, SF); throws kRangeOverflow when the product
// reaches 2^(2N) or the result leaves (-2^N, 2^N).
FxpScalar mul_rescale(const FxpScalar& a, const FxpScalar& b);

// Throws kRangeOverflow unless |raw| < 2^N.
void check_range(std::int64_t raw, const FxpSpec& spec);

class FxpTensor {
 public:
  FxpTensor() = default;
  FxpTensor(std::vector<std::size_t> shape, const FxpSpec& spec);
  FxpTensor(std::vector<std::size_t> shape, std::vector<std::int64_t> raw, const FxpSpec& spec);

  static FxpTensor from_real(std::vector<std::size_t> shape, std::span<const double> values, const FxpSpec& spec);

  const std::vector<std::size_t>& shape() const { return shape_; }
  const FxpSpec& spec() const { return spec_; }
  std::size_t size() const { return raw_.size(); }

  std::span<const std::int64_t> raw() const { return raw_; }
  std::span<std::int64_t> raw() { return raw_; }
  std::int64_t& operator[](std::size_t i) { return raw_[i]; }
  std::int64_t operator[](std::size_t i) const { return raw_[i]; }
  // Row-major 2-D access.
  std::int64_t at(std::size_t r, std::size_t c) const { return raw_[r * shape_.back() + c]; }
  std::int64_t& at(std::size_t r, std::size_t c) { return raw_[r * shape_.back() + c]; }

  FxpScalar scalar(std::size_t i) const { return FxpScalar{raw_[i], spec_}; }
  std::vector<double> to_real() const;

  friend bool operator==(const FxpTensor&, const FxpTensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::int64_t> raw_;
  FxpSpec spec_;
};

}  // namespace zkaudit::fxp
