#include "gps/prng.hpp"

#include <sodium.h>

#include "gps/errors.hpp"

namespace gps {

namespace {

void put_be64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw Error("libsodium initialisation failed");
  }
};

}  // namespace

Seed128 seed_from_hex(std::string_view hex) {
  if (hex.empty() || hex.size() > 32) throw FormatError("seed must be 1..32 hex digits");
  const BigUint v = from_hex(hex);
  Seed128 seed{};
  const auto bytes = to_bytes_be(v);
  std::copy(bytes.begin(), bytes.end(), seed.end() - static_cast<std::ptrdiff_t>(bytes.size()));
  return seed;
}

std::string seed_to_hex(const Seed128& seed) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::uint8_t b : seed) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

PrngStream::PrngStream(const Seed128& seed, std::uint64_t index) : seed_(seed), index_(index) {
  static const SodiumInit init;
}

void PrngStream::refill() {
  std::array<std::uint8_t, 16> msg{};
  put_be64(msg.data(), index_);
  put_be64(msg.data() + 8, counter_++);
  std::array<std::uint8_t, 64> out{};
  crypto_generichash(out.data(), out.size(), msg.data(), msg.size(), seed_.data(), seed_.size());
  for (std::size_t w = 0; w < block_.size(); ++w) {
    std::uint64_t v = 0;
    for (int b = 7; b >= 0; --b) v = (v << 8) | out[w * 8 + static_cast<std::size_t>(b)];
    block_[w] = v;
  }
  pos_ = 0;
}

std::uint64_t PrngStream::next_u64() {
  if (pos_ == block_.size()) refill();
  return block_[pos_++];
}

BigUint PrngStream::take_bits(std::size_t bits) {
  BigUint v = 0;
  std::size_t shift = 0;
  while (shift < bits) {
    BigUint word = next_u64();
    v |= word << shift;
    shift += 64;
  }
  return low_bits(v, bits);
}

}  // namespace gps
