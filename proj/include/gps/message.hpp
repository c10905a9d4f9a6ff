#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "gps/biguint.hpp"
#include "gps/params.hpp"

/// Wire frames: kind (1 byte) || body, integers as 4-byte big-endian length followed
/// by minimal big-endian bytes (zero has length 0).
///
///   COMMITMENT 0x01: Id_P (4) || len(x) || x
///   CHALLENGE  0x02: len(n_V) || n_V
///   RESPONSE   0x03: len(y) || y
///   VERDICT    0x04: 0x00 reject / 0x01 accept
namespace gps::proto {

enum class MessageKind : std::uint8_t { commitment = 0x01, challenge = 0x02, response = 0x03, verdict = 0x04 };

struct Commitment {
  ProverId id{};
  BigUint x;
  friend bool operator==(const Commitment&, const Commitment&) = default;
};

struct Challenge {
  BigUint n_v;
  friend bool operator==(const Challenge&, const Challenge&) = default;
};

struct Response {
  BigUint y;
  friend bool operator==(const Response&, const Response&) = default;
};

struct Verdict {
  bool accept = false;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

using Message = std::variant<Commitment, Challenge, Response, Verdict>;

using Frame = std::vector<std::uint8_t>;

/// Largest integer field accepted by the decoder.
inline constexpr std::uint32_t kMaxIntegerBytes = 4096;

MessageKind kind_of(const Message& m);
std::string_view to_string(MessageKind kind);

Frame encode(const Message& m);

/// Throws FramingError on unknown kind, truncation, trailing bytes, oversize or
/// non-minimal integers, or a verdict byte other than 0/1.
Message decode(std::span<const std::uint8_t> frame);

/// Fills the whole span or throws.
using ReadExact = std::function<void(std::span<std::uint8_t>)>;

/// Reads one self-delimiting frame from a byte stream. Throws FramingError for an
/// unknown kind or oversize length.
Frame read_frame(const ReadExact& read_exact);

}  // namespace gps::proto
