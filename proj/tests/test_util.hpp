#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "triwad/measure.hpp"
#include "triwad/rng.hpp"

namespace triwad::testutil {

// Bare TCP client for writing arbitrary bytes at a protocol endpoint.
class RawSocket {
public:
  RawSocket(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    ::inet_pton(AF_INET, host.c_str(), &addr.sin_addr);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd_);
      throw std::runtime_error("connect failed");
    }
  }
  ~RawSocket() {
    if (fd_ >= 0) ::close(fd_);
  }
  void write_bytes(const std::string& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent,
                               MSG_NOSIGNAL);
      if (n <= 0) return;  // peer may already have aborted
      sent += static_cast<std::size_t>(n);
    }
  }
  void shutdown_write() { ::shutdown(fd_, SHUT_WR); }

private:
  int fd_ = -1;
};

// Uniform empirical measure on m iid gaussian points around `center`.
inline DiscreteMeasure gaussian_cloud(Rng& rng, std::size_t m, std::size_t d,
                                      double center = 0.0, double scale = 1.0) {
  DataMatrix x(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x(i, j) = center + scale * rng.gaussian();
  return uniform_measure(std::move(x));
}

inline DiscreteMeasure points_1d(std::vector<double> xs) {
  const std::size_t n = xs.size();
  DataMatrix m(n, 1, std::move(xs));
  return uniform_measure(std::move(m));
}

// Generic (incommensurate) weights: the optimal basis is non-degenerate
// almost surely, so duals are unique up to gauge.
inline DiscreteMeasure weighted_cloud(Rng& rng, std::size_t m, std::size_t d,
                                      double center = 0.0) {
  DataMatrix x(m, d);
  for (auto& v : x.mutable_values()) v = center + rng.gaussian();
  std::vector<double> w(m);
  double sum = 0.0;
  for (auto& v : w) {
    v = rng.uniform(0.5, 1.5);
    sum += v;
  }
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    w[i] /= sum;
    partial += w[i];
  }
  w[m - 1] = 1.0 - partial;
  return DiscreteMeasure(std::move(x), std::move(w));
}

}  // namespace triwad::testutil
