#include "alpine/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

namespace alpine::transport {

namespace {

constexpr char kMagic[4] = {'A', 'L', 'P', 'N'};
constexpr std::size_t kHeaderSize = 4 + 2 + 2 + 8 + 4;
constexpr std::uint32_t kMaxPayload = 16u << 20;

void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(kHeaderSize + frame.payload.size());
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  put_u16(bytes, frame.version);
  put_u16(bytes, static_cast<std::uint16_t>(frame.type));
  put_u64(bytes, frame.seq);
  put_u32(bytes, static_cast<std::uint32_t>(frame.payload.size()));
  bytes.insert(bytes.end(), frame.payload.begin(), frame.payload.end());
  return bytes;
}

Frame decode_frame(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize) throw ProtocolError("frame shorter than header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ProtocolError("bad frame magic");
  Frame frame;
  frame.version = get_u16(bytes.data() + 4);
  if (frame.version != 1)
    throw ProtocolError("unsupported frame version " + std::to_string(frame.version));
  const std::uint16_t type = get_u16(bytes.data() + 6);
  if (type < 1 || type > 4) throw ProtocolError("unknown frame type");
  frame.type = static_cast<FrameType>(type);
  frame.seq = get_u64(bytes.data() + 8);
  const std::uint32_t len = get_u32(bytes.data() + 16);
  if (len > kMaxPayload) throw ProtocolError("frame payload too large");
  if (bytes.size() != kHeaderSize + len)
    throw ProtocolError("frame length mismatch");
  frame.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  return frame;
}

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<std::uint8_t>> queue;
  bool closed = false;

  void push(std::vector<std::uint8_t> msg) {
    {
      std::lock_guard<std::mutex> lock(mu);
      if (closed) throw TransportError("send on closed channel");
      queue.push_back(std::move(msg));
    }
    cv.notify_one();
  }

  bool pop(std::vector<std::uint8_t>& out, int timeout_ms) {
    std::unique_lock<std::mutex> lock(mu);
    const auto pred = [&] { return !queue.empty() || closed; };
    if (timeout_ms < 0) {
      cv.wait(lock, pred);
    } else if (!cv.wait_for(lock, std::chrono::milliseconds(timeout_ms), pred)) {
      return false;
    }
    if (queue.empty()) throw TransportError("channel closed");
    out = std::move(queue.front());
    queue.pop_front();
    return true;
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mu);
      closed = true;
    }
    cv.notify_all();
  }
};

struct Duplex {
  Pipe a_to_b;
  Pipe b_to_a;
};

class InprocChannel : public Channel {
 public:
  InprocChannel(std::shared_ptr<Duplex> duplex, bool is_a)
      : duplex_(std::move(duplex)), is_a_(is_a) {}

  void send_bytes(std::vector<std::uint8_t> bytes) override {
    (is_a_ ? duplex_->a_to_b : duplex_->b_to_a).push(std::move(bytes));
  }
  bool recv_bytes(std::vector<std::uint8_t>& out, int timeout_ms) override {
    return (is_a_ ? duplex_->b_to_a : duplex_->a_to_b).pop(out, timeout_ms);
  }
  void close() override {
    duplex_->a_to_b.close();
    duplex_->b_to_a.close();
  }

 private:
  std::shared_ptr<Duplex> duplex_;
  bool is_a_;
};

class SocketChannel : public Channel {
 public:
  explicit SocketChannel(int fd) : fd_(fd) {}
  ~SocketChannel() override { close(); }

  void send_bytes(std::vector<std::uint8_t> bytes) override {
    std::uint8_t len[4];
    const std::uint32_t n = static_cast<std::uint32_t>(bytes.size());
    for (int i = 0; i < 4; ++i) len[i] = static_cast<std::uint8_t>(n >> (8 * i));
    write_all(len, 4);
    write_all(bytes.data(), bytes.size());
  }

  bool recv_bytes(std::vector<std::uint8_t>& out, int timeout_ms) override {
    std::uint8_t len[4];
    if (!read_all(len, 4, timeout_ms)) return false;
    const std::uint32_t n = get_u32(len);
    if (n > kMaxPayload) throw ProtocolError("oversized socket message");
    out.resize(n);
    if (!read_all(out.data(), n, -1))
      throw TransportError("socket closed mid-message");
    return true;
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  void write_all(const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      const ssize_t written = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (written <= 0) throw TransportError("socket send failed");
      p += written;
      n -= static_cast<std::size_t>(written);
    }
  }

  // timeout applies to the first byte only; -1 blocks.
  bool read_all(std::uint8_t* p, std::size_t n, int timeout_ms) {
    bool first = true;
    while (n > 0) {
      if (first && timeout_ms >= 0) {
        struct pollfd pfd {fd_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc == 0) return false;
        if (rc < 0) throw TransportError("poll failed");
      }
      const ssize_t got = ::recv(fd_, p, n, 0);
      if (got == 0) throw TransportError("channel closed");
      if (got < 0) throw TransportError("socket recv failed");
      p += got;
      n -= static_cast<std::size_t>(got);
      first = false;
    }
    return true;
  }

  int fd_;
};

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair() {
  auto duplex = std::make_shared<Duplex>();
  return {std::make_unique<InprocChannel>(duplex, true),
          std::make_unique<InprocChannel>(duplex, false)};
}

SocketServer::SocketServer() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw TransportError("cannot create listen socket");
  int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw TransportError("cannot bind localhost socket");
  if (::listen(listen_fd_, 256) != 0) throw TransportError("listen failed");
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketServer::~SocketServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

std::unique_ptr<Channel> SocketServer::accept_one(int timeout_ms) {
  struct pollfd pfd {listen_fd_, POLLIN, 0};
  const int rc = ::poll(&pfd, 1, timeout_ms);
  if (rc == 0) throw TransportError("accept timed out");
  if (rc < 0) throw TransportError("poll failed");
  const int fd = ::accept(listen_fd_, nullptr, nullptr);
  if (fd < 0) throw TransportError("accept failed");
  return std::make_unique<SocketChannel>(fd);
}

std::unique_ptr<Channel> connect_local(int port, int timeout_ms) {
  (void)timeout_ms;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("cannot create socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw TransportError("connect to localhost:" + std::to_string(port) + " failed");
  }
  return std::make_unique<SocketChannel>(fd);
}

void Session::send(FrameType type, std::vector<std::uint8_t> payload) {
  Frame frame;
  frame.type = type;
  frame.seq = ++send_seq_;
  frame.payload = std::move(payload);
  channel_->send_bytes(encode_frame(frame));
}

Frame Session::recv(int timeout_ms) {
  std::vector<std::uint8_t> bytes;
  if (!channel_->recv_bytes(bytes, timeout_ms))
    throw TransportError("recv timed out");
  Frame frame = decode_frame(bytes);
  if (frame.seq != recv_seq_ + 1) {
    if (frame.seq <= recv_seq_)
      throw ProtocolError("duplicate frame seq " + std::to_string(frame.seq));
    throw ProtocolError("out-of-order frame seq " + std::to_string(frame.seq) +
                        ", expected " + std::to_string(recv_seq_ + 1));
  }
  recv_seq_ = frame.seq;
  return frame;
}

Frame Session::request(FrameType type, std::vector<std::uint8_t> payload,
                       int timeout_ms, int retries) {
  using clock = std::chrono::steady_clock;
  Frame out;
  out.type = type;
  out.seq = ++send_seq_;  // retries reuse the same sequence number
  out.payload = std::move(payload);
  const auto bytes_out = encode_frame(out);
  for (int attempt = 0; attempt <= retries; ++attempt) {
    const auto t0 = clock::now();
    channel_->send_bytes(bytes_out);
    std::vector<std::uint8_t> bytes;
    if (!channel_->recv_bytes(bytes, timeout_ms)) continue;
    Frame frame = decode_frame(bytes);
    if (frame.seq <= recv_seq_) continue;  // stale duplicate reply
    if (frame.seq != recv_seq_ + 1)
      throw ProtocolError("out-of-order reply seq " + std::to_string(frame.seq));
    recv_seq_ = frame.seq;
    const auto t1 = clock::now();
    rtts_ms_.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    return frame;
  }
  throw TransportError("request abandoned after " + std::to_string(retries + 1) +
                       " attempts");
}

}  // namespace alpine::transport
