#include "gps/biguint.hpp"

#include <algorithm>

#include "gps/errors.hpp"

namespace gps {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string to_hex(const BigUint& v) {
  if (v.is_zero()) return "0";
  std::string out;
  BigUint rest = v;
  while (!rest.is_zero()) {
    out.push_back(kHexDigits[static_cast<unsigned>(rest & 0xf)]);
    rest >>= 4;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

BigUint from_hex(std::string_view hex) {
  if (hex.empty()) throw FormatError("empty hex value");
  BigUint v = 0;
  for (char c : hex) {
    const int d = hex_value(c);
    if (d < 0) throw FormatError("invalid hex digit in '" + std::string(hex) + "'");
    v <<= 4;
    v |= d;
  }
  return v;
}

std::size_t bit_length(const BigUint& v) {
  if (v.is_zero()) return 0;
  return boost::multiprecision::msb(v) + 1;
}

std::vector<std::uint8_t> to_bytes_be(const BigUint& v) {
  std::vector<std::uint8_t> out;
  BigUint rest = v;
  while (!rest.is_zero()) {
    out.push_back(static_cast<std::uint8_t>(rest & 0xff));
    rest >>= 8;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

BigUint from_bytes_be(std::span<const std::uint8_t> bytes) {
  BigUint v = 0;
  for (std::uint8_t b : bytes) {
    v <<= 8;
    v |= b;
  }
  return v;
}

BigUint pow2(std::size_t bits) {
  BigUint v = 1;
  v <<= bits;
  return v;
}

BigUint low_bits(const BigUint& v, std::size_t bits) {
  return v & (pow2(bits) - 1);
}

bool test_bit(const BigUint& v, std::size_t bit) {
  return boost::multiprecision::bit_test(v, static_cast<unsigned>(bit));
}

}  // namespace gps
