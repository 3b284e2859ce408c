#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace alpine::transport {

class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

enum class FrameType : std::uint16_t { Task = 1, Record = 2, Feedback = 3, Ack = 4 };

struct Frame {
  std::uint16_t version = 1;
  FrameType type = FrameType::Ack;
  std::uint64_t seq = 0;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
Frame decode_frame(const std::vector<std::uint8_t>& bytes);  // throws ProtocolError

// Bidirectional byte-message endpoint.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send_bytes(std::vector<std::uint8_t> bytes) = 0;
  // Returns false on timeout; throws TransportError once the peer closed
  // and the queue drained.
  virtual bool recv_bytes(std::vector<std::uint8_t>& out, int timeout_ms) = 0;
  virtual void close() = 0;
};

// Two endpoints of an in-process duplex pipe.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair();

// Local stream sockets carrying the same frame format.
class SocketServer {
 public:
  SocketServer();  // binds an ephemeral localhost port
  ~SocketServer();
  int port() const { return port_; }
  std::unique_ptr<Channel> accept_one(int timeout_ms);

 private:
  int listen_fd_ = -1;
  int port_ = 0;
};

std::unique_ptr<Channel> connect_local(int port, int timeout_ms);

// Sequence-checked frame session over a channel. Frames are delivered
// at most once and strictly in order; RTTs of request/reply exchanges are
// recorded on the requesting side.
class Session {
 public:
  explicit Session(std::shared_ptr<Channel> channel) : channel_(std::move(channel)) {}

  void send(FrameType type, std::vector<std::uint8_t> payload);
  Frame recv(int timeout_ms);

  // send + await the reply; retries the send up to `retries` times on
  // timeout, then throws TransportError. Records the round-trip time.
  Frame request(FrameType type, std::vector<std::uint8_t> payload, int timeout_ms,
                int retries = 3);

  const std::vector<double>& rtts_ms() const { return rtts_ms_; }
  std::uint64_t frames_sent() const { return send_seq_; }
  std::uint64_t frames_received() const { return recv_seq_; }
  void close() { channel_->close(); }

 private:
  std::shared_ptr<Channel> channel_;
  std::uint64_t send_seq_ = 0;  // last sequence sent
  std::uint64_t recv_seq_ = 0;  // last sequence accepted
  std::vector<double> rtts_ms_;
};

}  // namespace alpine::transport
