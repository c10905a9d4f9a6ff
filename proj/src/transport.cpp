#include "gps/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>

#include "gps/errors.hpp"

namespace gps::proto {

// ---- in-memory --------------------------------------------------------------

namespace {

struct Mailbox {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Frame> frames;
  bool closed = false;
};

class MemoryTransport final : public Transport {
 public:
  MemoryTransport(std::shared_ptr<Mailbox> inbox, std::shared_ptr<Mailbox> outbox,
                  std::chrono::milliseconds timeout)
      : inbox_(std::move(inbox)), outbox_(std::move(outbox)), timeout_(timeout) {}

  ~MemoryTransport() override { close(); }

  void send(std::span<const std::uint8_t> frame) override {
    {
      std::lock_guard lock(outbox_->mu);
      if (outbox_->closed) throw TransportError("send on closed channel");
      outbox_->frames.emplace_back(frame.begin(), frame.end());
    }
    outbox_->cv.notify_all();
  }

  Frame receive() override {
    std::unique_lock lock(inbox_->mu);
    if (!inbox_->cv.wait_for(lock, timeout_, [&] { return !inbox_->frames.empty() || inbox_->closed; })) {
      throw TransportError("receive timed out");
    }
    if (inbox_->frames.empty()) throw TransportError("peer closed the channel");
    Frame f = std::move(inbox_->frames.front());
    inbox_->frames.pop_front();
    return f;
  }

  void close() override {
    for (auto* box : {inbox_.get(), outbox_.get()}) {
      {
        std::lock_guard lock(box->mu);
        box->closed = true;
      }
      box->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Mailbox> inbox_;
  std::shared_ptr<Mailbox> outbox_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> make_memory_pair(
    std::chrono::milliseconds timeout) {
  auto a_to_b = std::make_shared<Mailbox>();
  auto b_to_a = std::make_shared<Mailbox>();
  return {std::make_unique<MemoryTransport>(b_to_a, a_to_b, timeout),
          std::make_unique<MemoryTransport>(a_to_b, b_to_a, timeout)};
}

// ---- TCP --------------------------------------------------------------------

namespace {

std::string errno_text(std::string_view what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

TcpTransport::TcpTransport(int fd, std::chrono::milliseconds timeout) : fd_(fd), timeout_(timeout) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpTransport::~TcpTransport() { close(); }

std::unique_ptr<TcpTransport> TcpTransport::connect(const std::string& host, std::uint16_t port,
                                                    std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError("resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text("socket");
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      return std::make_unique<TcpTransport>(fd, timeout);
    }
    last_error = errno_text("connect");
    ::close(fd);
  }
  ::freeaddrinfo(res);
  throw TransportError("connect " + host + ":" + service + ": " + last_error);
}

void TcpTransport::send(std::span<const std::uint8_t> frame) {
  if (fd_ < 0) throw TransportError("send on closed connection");
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

void TcpTransport::read_exact(std::span<std::uint8_t> out) {
  if (fd_ < 0) throw TransportError("receive on closed connection");
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::size_t got = 0;
  while (got < out.size()) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw TransportError("receive timed out");
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("poll"));
    }
    if (rc == 0) throw TransportError("receive timed out");
    const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("recv"));
    }
    if (n == 0) throw TransportError("peer closed the connection");
    got += static_cast<std::size_t>(n);
  }
}

Frame TcpTransport::receive() {
  return read_frame([this](std::span<std::uint8_t> out) { read_exact(out); });
}

void TcpTransport::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw TransportError("listen address must be an IPv4 literal: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = errno_text("bind/listen");
    ::close(fd_);
    throw TransportError(err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept(std::chrono::milliseconds io_timeout) {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpTransport>(fd, io_timeout);
    if (errno != EINTR) throw TransportError(errno_text("accept"));
  }
}

}  // namespace gps::proto
