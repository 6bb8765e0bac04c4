#include "lt3d/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "lt3d/error.hpp"

namespace lt3d {
namespace {

bool send_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::string errno_message(const std::string& what) { return what + ": " + std::strerror(errno); }

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {}

Service::~Service() { stop(); }

void Service::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kIo, errno_message("socket"));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (::inet_pton(AF_INET, config_.bind_address.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::kInvalidArgument, "bad bind address " + config_.bind_address);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, config_.backlog) != 0) {
    const std::string msg = errno_message("bind " + config_.bind_address + ":" + std::to_string(config_.port));
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::kIo, msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Service::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  {
    std::lock_guard lock(mutex_);
    for (auto& c : connections_) ::shutdown(c->fd, SHUT_RDWR);
  }
  reap(true);
}

void Service::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

void Service::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      if (!running_) break;
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    reap(false);
    std::lock_guard lock(mutex_);
    if (!running_) {
      ::close(fd);
      break;
    }
    auto c = std::make_unique<Connection>();
    c->fd = fd;
    Connection& ref = *c;
    c->thread = std::thread([&ref] { serve_connection(ref); });
    connections_.push_back(std::move(c));
  }
}

void Service::serve_connection(Connection& c) {
  FrameDecoder decoder;
  std::uint8_t buf[65536];
  bool open = true;
  while (open) {
    const ssize_t n = ::recv(c.fd, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    decoder.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    try {
      while (auto body = decoder.next()) {
        const std::string reply = handle_message(*body);
        if (!send_all(c.fd, encode_frame(reply))) {
          open = false;
          break;
        }
      }
    } catch (const Error& e) {
      send_all(c.fd, encode_frame(error_response(to_string(e.code()), e.what())));
      open = false;
    }
  }
  ::shutdown(c.fd, SHUT_RDWR);
  c.done = true;
}

void Service::reap(bool all) {
  std::list<std::unique_ptr<Connection>> finished;
  {
    std::lock_guard lock(mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (all || (*it)->done) {
        finished.push_back(std::move(*it));
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : finished) {
    if (c->thread.joinable()) c->thread.join();
    ::close(c->fd);
  }
}

Client::Client(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kIo, "cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd_ >= 0 && ::connect(fd_, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    const std::string msg = errno_message("connect " + host + ":" + std::to_string(port));
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kIo, msg);
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Client::~Client() {
  if (fd_ >= 0) ::close(fd_);
}

void Client::send_bytes(std::span<const std::uint8_t> bytes) {
  if (!send_all(fd_, bytes)) throw Error(ErrorCode::kIo, errno_message("send"));
}

std::optional<std::string> Client::read_frame() {
  std::uint8_t buf[65536];
  for (;;) {
    if (auto body = decoder_.next()) return body;
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw Error(ErrorCode::kIo, errno_message("recv"));
    if (n == 0) return std::nullopt;
    decoder_.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
  }
}

std::string Client::request(std::string_view body) {
  send_bytes(encode_frame(body));
  auto reply = read_frame();
  if (!reply) throw Error(ErrorCode::kIo, "connection closed before a response arrived");
  return *reply;
}

}  // namespace lt3d
