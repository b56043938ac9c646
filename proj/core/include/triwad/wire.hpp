#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

namespace triwad {

inline constexpr std::uint32_t kWireVersion = 1;
inline constexpr std::uint16_t kDefaultPort = 7073;
inline constexpr std::uint32_t kMaxFrameBytes = 256u * 1024u * 1024u;

enum class MsgType { Hello, Config, Measure, ImShare, Dist, Report, Error };

std::string to_string(MsgType t);
MsgType parse_msg_type(const std::string& name);

/// One protocol message: type tag, session token, JSON payload.
/// On the wire this is a little-endian u32 length prefix followed by
/// UTF-8 JSON; embedded measures are base64 WADM blobs.
struct WireMessage {
  MsgType type = MsgType::Error;
  std::string session_id;
  nlohmann::json payload;

  std::string encode() const;  // full frame including the length prefix
  static WireMessage decode_body(std::string_view body);
};

/// Duplex ordered message channel between the two parties.
class Channel {
public:
  virtual ~Channel() = default;
  virtual void send(const WireMessage& msg) = 0;
  virtual WireMessage recv() = 0;
};

/// In-memory channel pair for single-process sessions. Thread-safe;
/// each endpoint reads what the other wrote.
class LoopChannel : public Channel {
public:
  static std::pair<std::unique_ptr<LoopChannel>, std::unique_ptr<LoopChannel>>
  make_pair();

  // Wakes a peer blocked in recv(); further reads there fail cleanly.
  ~LoopChannel() override;

  void send(const WireMessage& msg) override;
  WireMessage recv() override;

private:
  struct Queue {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<std::string> frames;
    bool closed = false;
  };
  LoopChannel(std::shared_ptr<Queue> out, std::shared_ptr<Queue> in)
      : out_(std::move(out)), in_(std::move(in)) {}

  std::shared_ptr<Queue> out_, in_;
};

/// Blocking TCP channel with a per-message receive timeout. Malformed
/// frames (bad length, truncation, invalid JSON, unknown type) raise
/// ProtocolError; they never take the process down.
class TcpChannel : public Channel {
public:
  static std::unique_ptr<TcpChannel> connect(const std::string& host,
                                             std::uint16_t port,
                                             int timeout_ms);
  // Wraps an already-accepted socket (see TcpListener).
  explicit TcpChannel(int fd, int timeout_ms);
  ~TcpChannel() override;

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send(const WireMessage& msg) override;
  WireMessage recv() override;

private:
  int fd_ = -1;
  int timeout_ms_ = 30000;
};

class TcpListener {
public:
  TcpListener(const std::string& bind_addr, std::uint16_t port);
  ~TcpListener();

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<TcpChannel> accept_one(int timeout_ms);

private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace triwad
