#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "gps/biguint.hpp"

namespace gps {

using Seed128 = std::array<std::uint8_t, 16>;

Seed128 seed_from_hex(std::string_view hex);
std::string seed_to_hex(const Seed128& seed);

/// Deterministic, index-addressable bit stream used to regenerate coupon randomness.
///
/// Block k of stream (seed, index) is BLAKE2b-512 keyed with the 16-byte seed over the
/// 16-byte message index_be64 || k_be64. Blocks are concatenated and bits are consumed
/// least-significant first within each little-endian 64-bit word.
class PrngStream {
 public:
  PrngStream(const Seed128& seed, std::uint64_t index);

  std::uint64_t next_u64();

  /// Integer in [0, 2^bits[ built from the next ceil(bits/64) words, first word in the
  /// low bits. Unused high bits of the last word are dropped.
  BigUint take_bits(std::size_t bits);

 private:
  void refill();

  Seed128 seed_;
  std::uint64_t index_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 8> block_{};
  std::size_t pos_ = 8;
};

inline PrngStream prng_expand(const Seed128& seed, std::uint64_t index) {
  return PrngStream(seed, index);
}

}  // namespace gps
