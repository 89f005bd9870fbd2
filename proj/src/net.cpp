// SPDX-License-Identifier: Apache-2.0
#include "nbo/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "nbo/errors.hpp"

namespace nbo {

namespace {

[[noreturn]] void raise_errno(const std::string& what) {
  throw IoError(what + ": " + std::strerror(errno));
}

sockaddr_in make_addr(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ConfigError("bad IPv4 address '" + host + "'");
  return addr;
}

}  // namespace

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::send_all(std::string_view data) {
  size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n =
        ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      raise_errno("send");
    }
    sent += static_cast<size_t>(n);
  }
}

bool Socket::recv_exact(void* out, size_t n) {
  size_t got = 0;
  auto* p = static_cast<char*>(out);
  while (got < n) {
    const ssize_t r = ::recv(fd_, p + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;  // clean EOF between frames
      throw IoError("connection closed mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      raise_errno("recv");
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const std::string& host, uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) raise_errno("socket");
  Socket s(fd);
  const sockaddr_in addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0)
    raise_errno("connect to " + host + ":" + std::to_string(port));
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

Listener::Listener(const std::string& host, uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) raise_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
    const int saved = errno;
    ::close(fd_);
    fd_ = -1;
    errno = saved;
    raise_errno("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(fd_, 256) < 0) raise_errno("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) < 0)
    raise_errno("getsockname");
  port_ = ntohs(addr.sin_port);
}

std::optional<Socket> Listener::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR) continue;
    return std::nullopt;  // listener closed
  }
}

void Listener::close() {
  if (fd_ >= 0) {
    // shutdown unblocks a concurrent accept() before the fd goes away
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::pair<std::string, uint16_t> parse_address(const std::string& addr) {
  const size_t colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
    throw ConfigError("address must be host:port, got '" + addr + "'");
  const std::string host = addr.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + addr + "'");
  }
  if (port < 0 || port > 65535)
    throw ConfigError("port out of range in '" + addr + "'");
  return {host, static_cast<uint16_t>(port)};
}

}  // namespace nbo
