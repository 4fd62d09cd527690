#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "zkaudit/u256.hpp"

namespace zkaudit::air {

// A field element in Montgomery form. Only meaningful together with the
// PrimeField that produced it; equality of representations is equality of
// elements because every stored value is fully reduced.
struct Fe {
  std::array<std::uint64_t, 4> m{};
  friend bool operator==(const Fe&, const Fe&) = default;
};

// Prime field F_q for an odd prime q < 2^255, with Montgomery multiplication
// over four 64-bit limbs.
class PrimeField {
 public:
  // Throws Error(kInvalidArgument) if q is even, >= 2^255, or fails a
  // Miller-Rabin test.
  explicit PrimeField(const U256& modulus);

  static std::shared_ptr<const PrimeField> bn254();
  // Cached instance per modulus.
  static std::shared_ptr<const PrimeField> get(const U256& modulus);

  const U256& modulus() const { return modulus_; }
  unsigned modulus_bits() const { return modulus_.bit_length(); }

  Fe zero() const { return Fe{}; }
  Fe one() const { return one_; }

  Fe from_u256(const U256& v) const;  // requires v < q
  Fe from_u64(std::uint64_t v) const;
  // Negative values map to q - |v|.
  Fe from_i64(std::int64_t v) const;
  Fe from_i128(i128 v) const;
  U256 to_u256(const Fe& a) const;
  // Interprets a as a signed integer when it lies within 2^63 of zero
  // (either a < 2^63 or q - a <= 2^63); nullopt otherwise.
  std::optional<std::int64_t> to_i64(const Fe& a) const;

  Fe add(const Fe& a, const Fe& b) const;
  Fe sub(const Fe& a, const Fe& b) const;
  Fe neg(const Fe& a) const;
  Fe mul(const Fe& a, const Fe& b) const;
  Fe pow(const Fe& base, const U256& exponent) const;

  bool is_zero(const Fe& a) const { return a == Fe{}; }
  // Canonical value strictly below 2^bits.
  bool below_pow2(const Fe& a, unsigned bits) const { return to_u256(a).below_pow2(bits); }

  std::string to_hex(const Fe& a) const { return to_u256(a).to_hex(); }

 private:
  std::array<std::uint64_t, 4> mont_mul(const std::array<std::uint64_t, 4>& a,
                                        const std::array<std::uint64_t, 4>& b) const;
  bool miller_rabin() const;

  U256 modulus_;
  std::uint64_t inv_ = 0;  // -q^{-1} mod 2^64
  std::array<std::uint64_t, 4> r2_{};
  Fe one_;
};

}  // namespace zkaudit::air
