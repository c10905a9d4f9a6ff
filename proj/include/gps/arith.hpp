#pragma once

#include "gps/biguint.hpp"

/// Reference big-integer arithmetic. Everything here is ground truth for the
/// datapath models and the verifier; nothing here is shared with `gps::datapath`.
namespace gps::arith {

/// Exact product by schoolbook multiplication over 32-bit limbs.
BigUint mul_oracle(const BigUint& a, const BigUint& b);

/// base^exp mod modulus, left-to-right square-and-multiply. Throws DomainError when
/// modulus < 2.
BigUint modexp(const BigUint& base, const BigUint& exp, const BigUint& modulus);

/// b with (a*b) mod modulus = 1 via extended Euclid. Throws InversionError carrying
/// gcd(a, modulus) when no inverse exists.
BigUint modinv(const BigUint& a, const BigUint& modulus);

BigUint gcd(BigUint a, BigUint b);

}  // namespace gps::arith
