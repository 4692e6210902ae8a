#include <gtest/gtest.h>

#include <random>

#include "splatop/protocol/websocket.hpp"

using namespace splatop;

namespace {

Bytes to_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

// Hand-built frame with an explicit FIN bit.
Bytes raw_frame(bool fin, std::uint8_t opcode, const Bytes& payload, std::uint32_t mask) {
  Bytes out{static_cast<std::uint8_t>((fin ? 0x80 : 0) | opcode), static_cast<std::uint8_t>(0x80 | payload.size())};
  const std::uint8_t key[4] = {static_cast<std::uint8_t>(mask >> 24), static_cast<std::uint8_t>(mask >> 16),
                               static_cast<std::uint8_t>(mask >> 8), static_cast<std::uint8_t>(mask)};
  for (std::uint8_t k : key) out.push_back(k);
  for (std::size_t i = 0; i < payload.size(); ++i) out.push_back(payload[i] ^ key[i % 4]);
  return out;
}

}  // namespace

TEST(WebSocket, AcceptKeyExample) {
  EXPECT_EQ(ws::accept_key("dGhlIHNhbXBsZSBub25jZQ=="), "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
}

TEST(WebSocket, UnmaskedShortFrameLayout) {
  const Bytes b = ws::encode(ws::Opcode::Binary, to_bytes("abc"));
  EXPECT_EQ(b, (Bytes{0x82, 0x03, 'a', 'b', 'c'}));
}

TEST(WebSocket, MaskedHelloExample) {
  // Masked "Hello" with key 37 fa 21 3d.
  const Bytes b = ws::encode(ws::Opcode::Text, to_bytes("Hello"), 0x37fa213d);
  EXPECT_EQ(b, (Bytes{0x81, 0x85, 0x37, 0xfa, 0x21, 0x3d, 0x7f, 0x9f, 0x4d, 0x51, 0x58}));
  ws::Parser p(true);
  p.feed(b);
  const auto m = p.next();
  ASSERT_TRUE(m);
  EXPECT_EQ(m->opcode, ws::Opcode::Text);
  EXPECT_EQ(m->payload, to_bytes("Hello"));
  EXPECT_FALSE(p.next());
}

TEST(WebSocket, ExtendedLengths) {
  for (std::size_t n : {125u, 126u, 65535u, 65536u, 200000u}) {
    Bytes payload(n);
    for (std::size_t i = 0; i < n; ++i) payload[i] = static_cast<std::uint8_t>(i * 7);
    const Bytes b = ws::encode(ws::Opcode::Binary, payload, 0x01020304);
    ws::Parser p(true);
    for (std::size_t pos = 0; pos < b.size(); pos += 1000) p.feed(std::span(b).subspan(pos, std::min<std::size_t>(1000, b.size() - pos)));
    const auto m = p.next();
    ASSERT_TRUE(m) << n;
    EXPECT_EQ(m->payload, payload);
  }
}

TEST(WebSocket, FragmentedMessageWithInterleavedPing) {
  ws::Parser p(true);
  Bytes stream = raw_frame(false, 0x2, {1, 2}, 0xdeadbeef);
  const Bytes ping = raw_frame(true, 0x9, {9}, 0x11111111);
  const Bytes mid = raw_frame(false, 0x0, {3}, 0x22222222);
  const Bytes last = raw_frame(true, 0x0, {4, 5}, 0x33333333);
  stream.insert(stream.end(), ping.begin(), ping.end());
  stream.insert(stream.end(), mid.begin(), mid.end());
  stream.insert(stream.end(), last.begin(), last.end());
  p.feed(stream);
  auto m = p.next();
  ASSERT_TRUE(m);
  EXPECT_EQ(m->opcode, ws::Opcode::Ping);
  m = p.next();
  ASSERT_TRUE(m);
  EXPECT_EQ(m->opcode, ws::Opcode::Binary);
  EXPECT_EQ(m->payload, (Bytes{1, 2, 3, 4, 5}));
}

TEST(WebSocket, ServerRejectsUnmaskedClientFrames) {
  ws::Parser p(true);
  p.feed(ws::encode(ws::Opcode::Binary, Bytes{1}));
  EXPECT_THROW(p.next(), ProtocolError);
}

TEST(WebSocket, OversizedMessageRejected) {
  ws::Parser p(false, 100);
  p.feed(ws::encode(ws::Opcode::Binary, Bytes(101)));
  EXPECT_THROW(p.next(), ProtocolError);
}

TEST(WebSocket, ContinuationWithoutStartRejected) {
  ws::Parser p(true);
  p.feed(raw_frame(true, 0x0, {1}, 5));
  EXPECT_THROW(p.next(), ProtocolError);
}

TEST(WebSocket, UpgradeHandshake) {
  const std::string req = ws::upgrade_request("127.0.0.1", 9000, "dGhlIHNhbXBsZSBub25jZQ==");
  const auto key = ws::upgrade_key(req);
  ASSERT_TRUE(key);
  EXPECT_EQ(*key, "dGhlIHNhbXBsZSBub25jZQ==");
  const std::string resp = ws::upgrade_response(*key);
  EXPECT_NE(resp.find("101"), std::string::npos);
  EXPECT_NE(resp.find("s3pPLMBiTxaQ9kYGzzhZRbK+xOo="), std::string::npos);
  EXPECT_FALSE(ws::upgrade_key("POST / HTTP/1.1\r\n\r\n"));
  EXPECT_FALSE(ws::upgrade_key("GET / HTTP/1.1\r\nHost: x\r\n\r\n"));
}

TEST(WebSocket, RandomRoundTrips) {
  std::mt19937_64 rng(401);
  ws::Parser p(true);
  for (int i = 0; i < 300; ++i) {
    Bytes payload(rng() % 1000);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
    p.feed(ws::encode(ws::Opcode::Binary, payload, static_cast<std::uint32_t>(rng())));
    const auto m = p.next();
    ASSERT_TRUE(m);
    EXPECT_EQ(m->payload, payload);
  }
}
