#include "gps/arith.hpp"

#include <cstdint>
#include <vector>

#include "gps/errors.hpp"

namespace gps::arith {

namespace {

using Limbs = std::vector<std::uint32_t>;

// Little-endian 32-bit limbs.
Limbs to_limbs(const BigUint& v) {
  Limbs out;
  BigUint rest = v;
  while (!rest.is_zero()) {
    out.push_back(static_cast<std::uint32_t>(rest & 0xffffffffu));
    rest >>= 32;
  }
  return out;
}

BigUint from_limbs(const Limbs& limbs) {
  BigUint v = 0;
  for (auto it = limbs.rbegin(); it != limbs.rend(); ++it) {
    v <<= 32;
    v |= *it;
  }
  return v;
}

}  // namespace

BigUint mul_oracle(const BigUint& a, const BigUint& b) {
  const Limbs x = to_limbs(a);
  const Limbs y = to_limbs(b);
  if (x.empty() || y.empty()) return 0;

  Limbs prod(x.size() + y.size(), 0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::uint64_t carry = 0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      // x*y + prod + carry <= (2^32-1)^2 + 2*(2^32-1) = 2^64 - 1
      const std::uint64_t t = static_cast<std::uint64_t>(x[i]) * y[j] + prod[i + j] + carry;
      prod[i + j] = static_cast<std::uint32_t>(t);
      carry = t >> 32;
    }
    prod[i + y.size()] = static_cast<std::uint32_t>(carry);
  }
  return from_limbs(prod);
}

BigUint modexp(const BigUint& base, const BigUint& exp, const BigUint& modulus) {
  if (modulus < 2) throw DomainError("modexp: modulus must be >= 2");
  const BigUint b = base % modulus;
  BigUint acc = 1;
  for (std::size_t i = bit_length(exp); i-- > 0;) {
    acc = (acc * acc) % modulus;
    if (test_bit(exp, i)) acc = (acc * b) % modulus;
  }
  return acc;
}

BigUint gcd(BigUint a, BigUint b) {
  while (!b.is_zero()) {
    BigUint t = a % b;
    a = std::move(b);
    b = std::move(t);
  }
  return a;
}

BigUint modinv(const BigUint& a, const BigUint& modulus) {
  if (modulus < 2) throw DomainError("modinv: modulus must be >= 2");
  // Invariant: old_r = old_s*a (mod m), r = s*a (mod m).
  BigUint old_r = a % modulus, r = modulus;
  BigUint old_s = 1, s = 0;
  while (!r.is_zero()) {
    const BigUint q = old_r / r;
    BigUint next_r = old_r - q * r;
    old_r = std::move(r);
    r = std::move(next_r);
    BigUint next_s = old_s - q * s;
    old_s = std::move(s);
    s = std::move(next_s);
  }
  if (old_r != 1) {
    throw InversionError("modinv: value not invertible, gcd=" + to_hex(old_r), old_r);
  }
  BigUint inv = old_s % modulus;
  if (inv < 0) inv += modulus;
  return inv;
}

}  // namespace gps::arith
