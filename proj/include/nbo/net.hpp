// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace nbo {

/// Thin RAII wrapper over a stream socket fd.
class Socket {
public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }

  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  /// Write the full buffer; throws IoError on failure.
  void send_all(std::string_view data);

  /// Read exactly n bytes. Returns false on clean EOF at a message
  /// boundary (nothing read yet); throws IoError on mid-read EOF or error.
  bool recv_exact(void* out, size_t n);

  /// Half-close then close; safe to call from another thread to unblock a
  /// reader.
  void shutdown();
  void close();

  static Socket connect(const std::string& host, uint16_t port);

private:
  int fd_ = -1;
};

/// Listening socket bound to host:port (port 0 picks an ephemeral port).
class Listener {
public:
  Listener(const std::string& host, uint16_t port);
  ~Listener() { close(); }
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  uint16_t port() const { return port_; }

  /// Blocks until a connection arrives; returns nullopt once closed.
  std::optional<Socket> accept();

  void close();

private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

/// "host:port" -> pair; throws ConfigError on malformed input.
std::pair<std::string, uint16_t> parse_address(const std::string& addr);

}  // namespace nbo
