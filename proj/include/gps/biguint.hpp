#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace gps {

/// Arbitrary-precision unsigned value. Signed cpp_int is used as storage but every
/// public value in this library is non-negative.
using BigUint = boost::multiprecision::cpp_int;

/// Lowercase hex without leading zeros; zero is "0".
std::string to_hex(const BigUint& v);

/// Accepts upper or lower case digits, no prefix. Throws FormatError.
BigUint from_hex(std::string_view hex);

std::size_t bit_length(const BigUint& v);

/// Minimal big-endian encoding; zero encodes as an empty vector.
std::vector<std::uint8_t> to_bytes_be(const BigUint& v);
BigUint from_bytes_be(std::span<const std::uint8_t> bytes);

BigUint pow2(std::size_t bits);

/// v mod 2^bits.
BigUint low_bits(const BigUint& v, std::size_t bits);

bool test_bit(const BigUint& v, std::size_t bit);

/// Uniform value in [0, 2^bits[ drawn 64 bits at a time from any 64-bit URBG.
template <class Urbg>
BigUint random_bits(Urbg& rng, std::size_t bits) {
  BigUint v = 0;
  std::size_t filled = 0;
  while (filled < bits) {
    v <<= 64;
    v |= static_cast<std::uint64_t>(rng());
    filled += 64;
  }
  return low_bits(v, bits);
}

/// Uniform value in [0, bound[ by rejection sampling.
template <class Urbg>
BigUint random_below(Urbg& rng, const BigUint& bound) {
  const std::size_t bits = bit_length(bound);
  for (;;) {
    BigUint v = random_bits(rng, bits);
    if (v < bound) return v;
  }
}

}  // namespace gps
