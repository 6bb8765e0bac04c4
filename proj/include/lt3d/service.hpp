#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>

#include "lt3d/protocol.hpp"

namespace lt3d {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = kDefaultPort;  // 0 picks a free port
  int backlog = 128;
};

/// TCP server answering framed requests with handle_message. Each connection
/// gets its own thread and stays open until the peer closes it.
class Service {
 public:
  explicit Service(ServiceConfig config = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts accepting. Throws kIo when the address is unavailable.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();
  std::uint16_t port() const { return port_; }

 private:
  struct Connection {
    int fd = -1;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  static void serve_connection(Connection& c);
  void reap(bool all);

  ServiceConfig config_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::list<std::unique_ptr<Connection>> connections_;
};

/// Blocking client for the framed protocol.
class Client {
 public:
  Client(const std::string& host, std::uint16_t port);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  /// Sends one request and waits for its response.
  std::string request(std::string_view body);
  void send_bytes(std::span<const std::uint8_t> bytes);
  /// Next response, or nothing once the server closed the connection.
  std::optional<std::string> read_frame();

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

}  // namespace lt3d
