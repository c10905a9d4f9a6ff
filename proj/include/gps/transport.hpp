#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>

#include "gps/message.hpp"

namespace gps::proto {

inline constexpr std::chrono::milliseconds kDefaultTimeout{5000};

/// Blocking exchange of whole frames. One reader and one writer per connection.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual void send(std::span<const std::uint8_t> frame) = 0;
  /// Throws TransportError on timeout or when the peer has closed.
  virtual Frame receive() = 0;
  virtual void close() = 0;
};

/// Two connected in-process endpoints.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_memory_pair(
    std::chrono::milliseconds timeout = kDefaultTimeout);

class TcpTransport final : public Transport {
 public:
  TcpTransport(int fd, std::chrono::milliseconds timeout);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  /// Throws TransportError when the connection cannot be established.
  static std::unique_ptr<TcpTransport> connect(const std::string& host, std::uint16_t port,
                                               std::chrono::milliseconds timeout = kDefaultTimeout);

  void send(std::span<const std::uint8_t> frame) override;
  Frame receive() override;
  void close() override;

 private:
  void read_exact(std::span<std::uint8_t> out);

  int fd_;
  std::chrono::milliseconds timeout_;
};

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port; see port().
  TcpListener(const std::string& host, std::uint16_t port);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }

  /// Blocks until a client connects.
  std::unique_ptr<TcpTransport> accept(std::chrono::milliseconds io_timeout = kDefaultTimeout);

 private:
  int fd_;
  std::uint16_t port_;
};

}  // namespace gps::proto
