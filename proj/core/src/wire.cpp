#include "triwad/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "triwad/error.hpp"

namespace triwad {

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::Hello: return "HELLO";
    case MsgType::Config: return "CONFIG";
    case MsgType::Measure: return "MEASURE";
    case MsgType::ImShare: return "IM_SHARE";
    case MsgType::Dist: return "DIST";
    case MsgType::Report: return "REPORT";
    case MsgType::Error: return "ERROR";
  }
  return "ERROR";
}

MsgType parse_msg_type(const std::string& name) {
  if (name == "HELLO") return MsgType::Hello;
  if (name == "CONFIG") return MsgType::Config;
  if (name == "MEASURE") return MsgType::Measure;
  if (name == "IM_SHARE") return MsgType::ImShare;
  if (name == "DIST") return MsgType::Dist;
  if (name == "REPORT") return MsgType::Report;
  if (name == "ERROR") return MsgType::Error;
  throw ProtocolError("unknown message type '" + name + "'");
}

std::string WireMessage::encode() const {
  nlohmann::json j{{"msg_type", to_string(type)},
                   {"session_id", session_id},
                   {"payload", payload}};
  std::string body = j.dump();
  if (body.size() > kMaxFrameBytes) throw ProtocolError("frame too large");
  const auto len = static_cast<std::uint32_t>(body.size());
  std::string frame(4, '\0');
  std::memcpy(frame.data(), &len, 4);  // little-endian host assumed
  frame += body;
  return frame;
}

WireMessage WireMessage::decode_body(std::string_view body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ProtocolError("frame is not valid JSON");
  if (!j.is_object() || !j.contains("msg_type") || !j["msg_type"].is_string())
    throw ProtocolError("frame missing msg_type");
  WireMessage msg;
  msg.type = parse_msg_type(j["msg_type"].get<std::string>());
  msg.session_id = j.value("session_id", std::string{});
  msg.payload = j.value("payload", nlohmann::json::object());
  return msg;
}

// ---- LoopChannel ----------------------------------------------------------

std::pair<std::unique_ptr<LoopChannel>, std::unique_ptr<LoopChannel>>
LoopChannel::make_pair() {
  auto a_to_b = std::make_shared<Queue>();
  auto b_to_a = std::make_shared<Queue>();
  std::unique_ptr<LoopChannel> a(new LoopChannel(a_to_b, b_to_a));
  std::unique_ptr<LoopChannel> b(new LoopChannel(b_to_a, a_to_b));
  return {std::move(a), std::move(b)};
}

LoopChannel::~LoopChannel() {
  {
    std::lock_guard lock(out_->mutex);
    out_->closed = true;
  }
  out_->ready.notify_all();
}

void LoopChannel::send(const WireMessage& msg) {
  std::string frame = msg.encode();
  {
    std::lock_guard lock(out_->mutex);
    out_->frames.push_back(std::move(frame));
  }
  out_->ready.notify_one();
}

WireMessage LoopChannel::recv() {
  std::unique_lock lock(in_->mutex);
  in_->ready.wait(lock, [&] { return !in_->frames.empty() || in_->closed; });
  if (in_->frames.empty()) throw ProtocolError("peer closed the channel");
  std::string frame = std::move(in_->frames.front());
  in_->frames.pop_front();
  lock.unlock();
  if (frame.size() < 4) throw ProtocolError("truncated frame");
  return WireMessage::decode_body(std::string_view(frame).substr(4));
}

// ---- TcpChannel -----------------------------------------------------------

namespace {

void set_recv_timeout(int fd, int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void write_all(int fd, const char* data, std::size_t size) {
  std::size_t sent = 0;
  while (sent < size) {
    const ssize_t n = ::send(fd, data + sent, size - sent, MSG_NOSIGNAL);
    if (n <= 0) throw ProtocolError("send failed: " + std::string(strerror(errno)));
    sent += static_cast<std::size_t>(n);
  }
}

// Reads exactly `size` bytes; EOF or timeout mid-frame is a protocol error.
void read_all(int fd, char* data, std::size_t size) {
  std::size_t got = 0;
  while (got < size) {
    const ssize_t n = ::recv(fd, data + got, size - got, 0);
    if (n == 0) throw ProtocolError("peer closed the connection");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw ProtocolError("receive timeout");
      throw ProtocolError("recv failed: " + std::string(strerror(errno)));
    }
    got += static_cast<std::size_t>(n);
  }
}

}  // namespace

TcpChannel::TcpChannel(int fd, int timeout_ms) : fd_(fd), timeout_ms_(timeout_ms) {
  set_recv_timeout(fd_, timeout_ms_);
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host,
                                                std::uint16_t port,
                                                int timeout_ms) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw ProtocolError("cannot create socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw ConfigError("invalid address '" + host + "'");
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = strerror(errno);
    ::close(fd);
    throw ProtocolError("connect to " + host + ":" + std::to_string(port) +
                        " failed: " + err);
  }
  return std::make_unique<TcpChannel>(fd, timeout_ms);
}

void TcpChannel::send(const WireMessage& msg) {
  const std::string frame = msg.encode();
  write_all(fd_, frame.data(), frame.size());
}

WireMessage TcpChannel::recv() {
  std::uint32_t len = 0;
  read_all(fd_, reinterpret_cast<char*>(&len), 4);
  if (len == 0 || len > kMaxFrameBytes)
    throw ProtocolError("declared frame length " + std::to_string(len) +
                        " is out of bounds");
  std::string body(len, '\0');
  read_all(fd_, body.data(), len);
  return WireMessage::decode_body(body);
}

// ---- TcpListener ----------------------------------------------------------

TcpListener::TcpListener(const std::string& bind_addr, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ProtocolError("cannot create listening socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    fd_ = -1;
    throw ConfigError("invalid bind address '" + bind_addr + "'");
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw ProtocolError("bind failed: " + err);
  }
  if (::listen(fd_, 1) != 0) {
    const std::string err = strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw ProtocolError("listen failed: " + err);
  }
  socklen_t alen = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpListener::accept_one(int timeout_ms) {
  set_recv_timeout(fd_, timeout_ms);
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw ProtocolError("accept failed: " + std::string(strerror(errno)));
  return std::make_unique<TcpChannel>(fd, timeout_ms);
}

}  // namespace triwad
