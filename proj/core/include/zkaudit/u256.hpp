#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace zkaudit {

__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;

// Unsigned 256-bit integer, little-endian 64-bit limbs. Only what the field
// and the fixed-point spec need: comparison, hex I/O, bit queries.
struct U256 {
  std::array<std::uint64_t, 4> limbs{};

  static constexpr U256 from_u64(std::uint64_t v) { return U256{{v, 0, 0, 0}}; }
  // Accepts an optional 0x prefix; throws Error(kParse) on bad digits or overflow.
  static U256 from_hex(std::string_view hex);
  // Lowercase, "0x" prefix, no leading zeros ("0x0" for zero).
  std::string to_hex() const;

  bool is_zero() const { return (limbs[0] | limbs[1] | limbs[2] | limbs[3]) == 0; }
  bool bit(unsigned i) const { return (limbs[i / 64] >> (i % 64)) & 1U; }
  // Index of the highest set bit plus one; 0 for zero.
  unsigned bit_length() const;
  // True iff the value is strictly below 2^bits.
  bool below_pow2(unsigned bits) const;

  friend constexpr std::strong_ordering operator<=>(const U256& a, const U256& b) {
    for (int i = 3; i >= 0; --i) {
      if (a.limbs[i] != b.limbs[i]) return a.limbs[i] <=> b.limbs[i];
    }
    return std::strong_ordering::equal;
  }
  friend constexpr bool operator==(const U256& a, const U256& b) = default;
};

// Scalar-field prime of the BN254 curve.
inline const U256 kBn254ScalarModulus =
    U256::from_hex("0x30644e72e131a029b85045b68181585d2833e84879b9709143e1f593f0000001");

}  // namespace zkaudit
