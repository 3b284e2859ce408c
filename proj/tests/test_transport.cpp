#include <doctest.h>

#include <thread>

#include "alpine/rng.hpp"
#include "alpine/transport.hpp"

using namespace alpine;
using namespace alpine::transport;

TEST_CASE("frame encode/decode round trip") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Frame f;
    f.type = static_cast<FrameType>(1 + rng.uniform_int(4));
    f.seq = rng.next_u64();
    f.payload.resize(rng.uniform_int(256));
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng.uniform_int(256));
    const auto bytes = encode_frame(f);
    const Frame back = decode_frame(bytes);
    CHECK(back.version == f.version);
    CHECK(back.type == f.type);
    CHECK(back.seq == f.seq);
    CHECK(back.payload == f.payload);
  }
}

TEST_CASE("malformed frames are rejected") {
  Frame f;
  f.type = FrameType::Task;
  f.seq = 1;
  f.payload = {1, 2, 3};
  auto bytes = encode_frame(f);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_frame(bad_magic), ProtocolError);

  auto truncated = bytes;
  truncated.resize(10);
  CHECK_THROWS_AS(decode_frame(truncated), ProtocolError);

  auto length_mismatch = bytes;
  length_mismatch.push_back(0);
  CHECK_THROWS_AS(decode_frame(length_mismatch), ProtocolError);

  auto bad_type = bytes;
  bad_type[6] = 99;
  CHECK_THROWS_AS(decode_frame(bad_type), ProtocolError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_frame(bad_version), ProtocolError);
}

TEST_CASE("in-process echo round trip preserves payload bytes") {
  auto [a, b] = make_inproc_pair();
  Session client(std::move(a));
  Session server(std::move(b));

  std::thread echo([&] {
    const Frame f = server.recv(1000);
    server.send(FrameType::Ack, f.payload);
  });

  const std::vector<std::uint8_t> payload = {9, 8, 7, 6, 5};
  const Frame reply = client.request(FrameType::Record, payload, 1000);
  echo.join();
  CHECK(reply.type == FrameType::Ack);
  CHECK(reply.payload == payload);
  CHECK(client.rtts_ms().size() == 1);
}

TEST_CASE("out-of-order and duplicate sequences are rejected") {
  auto [a, b] = make_inproc_pair();
  Session receiver(std::move(b));

  Frame f;
  f.type = FrameType::Task;
  f.payload = {1};

  f.seq = 1;
  a->send_bytes(encode_frame(f));
  CHECK(receiver.recv(100).seq == 1);

  f.seq = 3;  // gap
  a->send_bytes(encode_frame(f));
  CHECK_THROWS_AS(receiver.recv(100), ProtocolError);

  auto [c, d] = make_inproc_pair();
  Session receiver2(std::move(d));
  f.seq = 1;
  c->send_bytes(encode_frame(f));
  CHECK(receiver2.recv(100).seq == 1);
  c->send_bytes(encode_frame(f));  // duplicate
  CHECK_THROWS_AS(receiver2.recv(100), ProtocolError);
}

TEST_CASE("request times out and retries before failing") {
  auto [a, b] = make_inproc_pair();
  Session client(std::move(a));
  // Nobody answers: four attempts, then transport failure.
  CHECK_THROWS_AS(client.request(FrameType::Record, {1, 2}, 5, 3), TransportError);
  // The peer saw four copies of the same sequence number.
  std::vector<std::uint8_t> bytes;
  int copies = 0;
  while (b->recv_bytes(bytes, 5)) {
    const Frame f = decode_frame(bytes);
    CHECK(f.seq == 1);
    ++copies;
  }
  CHECK(copies == 4);
}

TEST_CASE("ten thousand frames round trip without loss in process") {
  auto [a, b] = make_inproc_pair();
  Session client(std::move(a));
  Session server(std::move(b));

  const int frames = 10000;
  std::thread echo([&] {
    for (int i = 0; i < frames; ++i) {
      const Frame f = server.recv(5000);
      server.send(FrameType::Ack, f.payload);
    }
  });

  int delivered = 0;
  for (int i = 0; i < frames; ++i) {
    std::vector<std::uint8_t> payload(8);
    for (int k = 0; k < 8; ++k) payload[k] = static_cast<std::uint8_t>((i >> k) & 0xff);
    const Frame reply = client.request(FrameType::Record, payload, 5000);
    if (reply.payload == payload) ++delivered;
  }
  echo.join();
  CHECK(delivered == frames);
  CHECK(client.frames_sent() == static_cast<std::uint64_t>(frames));
  CHECK(client.frames_received() == static_cast<std::uint64_t>(frames));
}

TEST_CASE("local socket channel carries the same frames") {
  SocketServer server;
  std::unique_ptr<Channel> server_side;
  std::thread acceptor([&] { server_side = server.accept_one(2000); });
  auto client_side = connect_local(server.port(), 2000);
  acceptor.join();

  Session client(std::move(client_side));
  Session srv(std::move(server_side));

  std::thread echo([&] {
    for (int i = 0; i < 50; ++i) {
      const Frame f = srv.recv(2000);
      srv.send(FrameType::Ack, f.payload);
    }
  });
  for (int i = 0; i < 50; ++i) {
    const std::vector<std::uint8_t> payload(i, static_cast<std::uint8_t>(i));
    const Frame reply = client.request(FrameType::Record, payload, 2000);
    CHECK(reply.payload == payload);
  }
  echo.join();
}

TEST_CASE("closed channel surfaces a transport error") {
  auto [a, b] = make_inproc_pair();
  Session client(std::move(a));
  b->close();
  CHECK_THROWS_AS(client.recv(100), TransportError);
}
