#include "zkaudit/air/field.hpp"

#include <map>
#include <mutex>

#include "zkaudit/error.hpp"

namespace zkaudit {

U256 U256::from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  if (hex.empty()) throw Error(Errc::kParse, "empty hex integer");
  U256 out;
  for (char ch : hex) {
    unsigned digit;
    if (ch >= '0' && ch <= '9') {
      digit = static_cast<unsigned>(ch - '0');
    } else if (ch >= 'a' && ch <= 'f') {
      digit = static_cast<unsigned>(ch - 'a' + 10);
    } else if (ch >= 'A' && ch <= 'F') {
      digit = static_cast<unsigned>(ch - 'A' + 10);
    } else {
      throw Error(Errc::kParse, "bad hex digit in '" + std::string(hex) + "'");
    }
    if (out.limbs[3] >> 60) throw Error(Errc::kParse, "hex integer exceeds 256 bits");
    for (int i = 3; i > 0; --i) out.limbs[i] = (out.limbs[i] << 4) | (out.limbs[i - 1] >> 60);
    out.limbs[0] = (out.limbs[0] << 4) | digit;
  }
  return out;
}

std::string U256::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  bool started = false;
  for (int i = 63; i >= 0; --i) {
    unsigned nibble = (limbs[i / 16] >> ((i % 16) * 4)) & 0xF;
    if (nibble != 0) started = true;
    if (started) out.push_back(kDigits[nibble]);
  }
  if (out.empty()) out = "0";
  return "0x" + out;
}

unsigned U256::bit_length() const {
  for (int i = 3; i >= 0; --i) {
    if (limbs[i] != 0) return static_cast<unsigned>(i * 64 + 64 - __builtin_clzll(limbs[i]));
  }
  return 0;
}

bool U256::below_pow2(unsigned bits) const { return bit_length() <= bits; }

}  // namespace zkaudit

namespace zkaudit::air {
namespace {

using Limbs = std::array<std::uint64_t, 4>;

bool geq(const Limbs& a, const Limbs& b) {
  for (int i = 3; i >= 0; --i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return true;
}

// a -= b, returns borrow
std::uint64_t sub_in_place(Limbs& a, const Limbs& b) {
  std::uint64_t borrow = 0;
  for (int i = 0; i < 4; ++i) {
    u128 diff = static_cast<u128>(a[i]) - b[i] - borrow;
    a[i] = static_cast<std::uint64_t>(diff);
    borrow = static_cast<std::uint64_t>(diff >> 64) & 1U;
  }
  return borrow;
}

std::uint64_t add_in_place(Limbs& a, const Limbs& b) {
  std::uint64_t carry = 0;
  for (int i = 0; i < 4; ++i) {
    u128 sum = static_cast<u128>(a[i]) + b[i] + carry;
    a[i] = static_cast<std::uint64_t>(sum);
    carry = static_cast<std::uint64_t>(sum >> 64);
  }
  return carry;
}

}  // namespace

PrimeField::PrimeField(const U256& modulus) : modulus_(modulus) {
  const Limbs& q = modulus_.limbs;
  if ((q[0] & 1U) == 0) throw Error(Errc::kInvalidArgument, "field modulus must be odd");
  if (modulus_.bit_length() > 255) throw Error(Errc::kInvalidArgument, "field modulus must be below 2^255");
  if (modulus_ < U256::from_u64(3)) throw Error(Errc::kInvalidArgument, "field modulus too small");

  std::uint64_t inv = 1;
  for (int i = 0; i < 7; ++i) inv *= 2 - q[0] * inv;
  inv_ = ~inv + 1;

  Limbs r{1, 0, 0, 0};
  for (int i = 0; i < 512; ++i) {
    add_in_place(r, r);
    if (geq(r, q)) sub_in_place(r, q);
  }
  r2_ = r;
  one_ = from_u256(U256::from_u64(1));

  if (!miller_rabin()) throw Error(Errc::kInvalidArgument, "field modulus is not prime");
}

std::shared_ptr<const PrimeField> PrimeField::bn254() { return get(kBn254ScalarModulus); }

std::shared_ptr<const PrimeField> PrimeField::get(const U256& modulus) {
  static std::mutex mu;
  static std::map<U256, std::shared_ptr<const PrimeField>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(modulus);
  if (it != cache.end()) return it->second;
  auto field = std::make_shared<const PrimeField>(modulus);
  cache.emplace(modulus, field);
  return field;
}

Limbs PrimeField::mont_mul(const Limbs& a, const Limbs& b) const {
  const Limbs& q = modulus_.limbs;
  std::uint64_t t[6] = {0, 0, 0, 0, 0, 0};
  for (int i = 0; i < 4; ++i) {
    std::uint64_t carry = 0;
    for (int j = 0; j < 4; ++j) {
      u128 cur = static_cast<u128>(a[j]) * b[i] + t[j] + carry;
      t[j] = static_cast<std::uint64_t>(cur);
      carry = static_cast<std::uint64_t>(cur >> 64);
    }
    u128 top = static_cast<u128>(t[4]) + carry;
    t[4] = static_cast<std::uint64_t>(top);
    t[5] = static_cast<std::uint64_t>(top >> 64);

    std::uint64_t m = t[0] * inv_;
    u128 cur = static_cast<u128>(m) * q[0] + t[0];
    carry = static_cast<std::uint64_t>(cur >> 64);
    for (int j = 1; j < 4; ++j) {
      cur = static_cast<u128>(m) * q[j] + t[j] + carry;
      t[j - 1] = static_cast<std::uint64_t>(cur);
      carry = static_cast<std::uint64_t>(cur >> 64);
    }
    cur = static_cast<u128>(t[4]) + carry;
    t[3] = static_cast<std::uint64_t>(cur);
    t[4] = t[5] + static_cast<std::uint64_t>(cur >> 64);
  }
  Limbs out{t[0], t[1], t[2], t[3]};
  if (t[4] != 0 || geq(out, q)) sub_in_place(out, q);
  return out;
}

Fe PrimeField::from_u256(const U256& v) const {
  if (!(v < modulus_)) throw Error(Errc::kInvalidArgument, "value not below field modulus");
  return Fe{mont_mul(v.limbs, r2_)};
}

Fe PrimeField::from_u64(std::uint64_t v) const {
  if (modulus_.bit_length() <= 64) v %= modulus_.limbs[0];
  return from_u256(U256::from_u64(v));
}

Fe PrimeField::from_i64(std::int64_t v) const {
  if (v >= 0) return from_u64(static_cast<std::uint64_t>(v));
  std::uint64_t mag = ~static_cast<std::uint64_t>(v) + 1;
  return neg(from_u64(mag));
}

Fe PrimeField::from_i128(i128 v) const {
  bool negative = v < 0;
  u128 mag = negative ? ~static_cast<u128>(v) + 1 : static_cast<u128>(v);
  Fe lo = from_u64(static_cast<std::uint64_t>(mag));
  Fe hi = from_u64(static_cast<std::uint64_t>(mag >> 64));
  Fe two32 = from_u64(std::uint64_t{1} << 32);
  Fe out = add(mul(hi, mul(two32, two32)), lo);
  return negative ? neg(out) : out;
}

U256 PrimeField::to_u256(const Fe& a) const { return U256{mont_mul(a.m, Limbs{1, 0, 0, 0})}; }

std::optional<std::int64_t> PrimeField::to_i64(const Fe& a) const {
  U256 v = to_u256(a);
  if (v.below_pow2(63)) return static_cast<std::int64_t>(v.limbs[0]);
  Limbs mag = modulus_.limbs;
  sub_in_place(mag, v.limbs);
  U256 m{mag};
  if (m.below_pow2(63)) return -static_cast<std::int64_t>(m.limbs[0]);
  if (m == U256{{std::uint64_t{1} << 63, 0, 0, 0}}) return INT64_MIN;
  return std::nullopt;
}

Fe PrimeField::add(const Fe& a, const Fe& b) const {
  Limbs out = a.m;
  add_in_place(out, b.m);
  if (geq(out, modulus_.limbs)) sub_in_place(out, modulus_.limbs);
  return Fe{out};
}

Fe PrimeField::sub(const Fe& a, const Fe& b) const {
  Limbs out = a.m;
  if (sub_in_place(out, b.m) != 0) add_in_place(out, modulus_.limbs);
  return Fe{out};
}

Fe PrimeField::neg(const Fe& a) const { return sub(Fe{}, a); }

Fe PrimeField::mul(const Fe& a, const Fe& b) const { return Fe{mont_mul(a.m, b.m)}; }

Fe PrimeField::pow(const Fe& base, const U256& exponent) const {
  Fe result = one_;
  for (int i = static_cast<int>(exponent.bit_length()) - 1; i >= 0; --i) {
    result = mul(result, result);
    if (exponent.bit(static_cast<unsigned>(i))) result = mul(result, base);
  }
  return result;
}

bool PrimeField::miller_rabin() const {
  Limbs nm1 = modulus_.limbs;
  sub_in_place(nm1, Limbs{1, 0, 0, 0});
  U256 d{nm1};
  unsigned s = 0;
  while (!d.bit(0)) {
    for (int i = 0; i < 3; ++i) d.limbs[i] = (d.limbs[i] >> 1) | (d.limbs[i + 1] << 63);
    d.limbs[3] >>= 1;
    ++s;
  }
  const Fe minus_one = neg(one_);
  static constexpr std::uint64_t kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  for (std::uint64_t base : kBases) {
    Fe a = from_u64(base);
    if (is_zero(a)) continue;
    Fe x = pow(a, d);
    if (x == one_ || x == minus_one) continue;
    bool witness = true;
    for (unsigned r = 1; r < s; ++r) {
      x = mul(x, x);
      if (x == minus_one) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

}  // namespace zkaudit::air
