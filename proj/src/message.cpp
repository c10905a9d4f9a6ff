#include "gps/message.hpp"

#include <type_traits>

#include "gps/errors.hpp"

namespace gps::proto {

namespace {

void put_u32(Frame& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_int(Frame& out, const BigUint& v) {
  if (v < 0) throw FramingError("negative integer");
  const auto bytes = to_bytes_be(v);
  if (bytes.size() > kMaxIntegerBytes) throw FramingError("integer too large for a frame");
  put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out.insert(out.end(), bytes.begin(), bytes.end());
}

std::uint32_t get_u32(std::span<const std::uint8_t> b) {
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (data_.size() - pos_ < n) throw FramingError("truncated frame");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  BigUint integer() {
    const std::uint32_t len = get_u32(take(4));
    if (len > kMaxIntegerBytes) throw FramingError("integer length exceeds limit");
    const auto bytes = take(len);
    if (!bytes.empty() && bytes[0] == 0) throw FramingError("non-minimal integer encoding");
    return from_bytes_be(bytes);
  }

  void finish() const {
    if (pos_ != data_.size()) throw FramingError("trailing bytes after frame");
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

MessageKind kind_of(const Message& m) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Commitment>) return MessageKind::commitment;
        else if constexpr (std::is_same_v<T, Challenge>) return MessageKind::challenge;
        else if constexpr (std::is_same_v<T, Response>) return MessageKind::response;
        else return MessageKind::verdict;
      },
      m);
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::commitment: return "COMMITMENT";
    case MessageKind::challenge: return "CHALLENGE";
    case MessageKind::response: return "RESPONSE";
    case MessageKind::verdict: return "VERDICT";
  }
  return "?";
}

Frame encode(const Message& m) {
  Frame out;
  out.push_back(static_cast<std::uint8_t>(kind_of(m)));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Commitment>) {
          out.insert(out.end(), v.id.begin(), v.id.end());
          put_int(out, v.x);
        } else if constexpr (std::is_same_v<T, Challenge>) {
          put_int(out, v.n_v);
        } else if constexpr (std::is_same_v<T, Response>) {
          put_int(out, v.y);
        } else {
          out.push_back(v.accept ? 0x01 : 0x00);
        }
      },
      m);
  return out;
}

Message decode(std::span<const std::uint8_t> frame) {
  Reader rd(frame);
  const std::uint8_t kind = rd.take(1)[0];
  Message out;
  switch (kind) {
    case 0x01: {
      Commitment c;
      const auto id = rd.take(4);
      std::copy(id.begin(), id.end(), c.id.begin());
      c.x = rd.integer();
      out = std::move(c);
      break;
    }
    case 0x02: out = Challenge{rd.integer()}; break;
    case 0x03: out = Response{rd.integer()}; break;
    case 0x04: {
      const std::uint8_t v = rd.take(1)[0];
      if (v > 1) throw FramingError("verdict byte must be 0 or 1");
      out = Verdict{v == 1};
      break;
    }
    default: throw FramingError("unknown frame kind " + std::to_string(kind));
  }
  rd.finish();
  return out;
}

Frame read_frame(const ReadExact& read_exact) {
  Frame frame(1);
  read_exact(frame);
  auto append = [&](std::size_t n) {
    const std::size_t at = frame.size();
    frame.resize(at + n);
    read_exact(std::span<std::uint8_t>(frame).subspan(at, n));
    return std::span<const std::uint8_t>(frame).subspan(at, n);
  };
  auto append_integer = [&] {
    const std::uint32_t len = get_u32(append(4));
    if (len > kMaxIntegerBytes) throw FramingError("integer length exceeds limit");
    append(len);
  };
  switch (frame[0]) {
    case 0x01:
      append(4);
      append_integer();
      break;
    case 0x02:
    case 0x03: append_integer(); break;
    case 0x04: append(1); break;
    default: throw FramingError("unknown frame kind " + std::to_string(frame[0]));
  }
  return frame;
}

}  // namespace gps::proto
