#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace httpa {
namespace {

using test::run_handshake;
using test::World;

struct Pair {
  TrustedChannel client;
  TrustedChannel server;
};

Pair make_pair(CipherSuite suite = CipherSuite::kAes128GcmSha256, std::uint8_t id = 1) {
  SystemRng rng;
  std::vector<PreSessionSecret> s{PreSessionSecret::generate(rng)};
  auto kb = derive_key_block(HandshakeMode::kOneWay, s, rng.array<32>(), rng.array<32>(), suite);
  SessionId sid{};
  sid.fill(id);
  return {TrustedChannel(sid, kb, Role::kClient), TrustedChannel(sid, kb, Role::kServer)};
}

ErrorCode error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Record, RoundTripEverySuiteBothDirections) {
  for (auto suite : kAllCipherSuites) {
    auto p = make_pair(suite);
    auto f = p.client.seal(as_bytes("hello"), as_bytes("ctx"));
    EXPECT_EQ(to_string(p.server.open(f, as_bytes("ctx"))), "hello");
    auto g = p.server.seal(as_bytes("world"), as_bytes("ctx2"));
    EXPECT_EQ(to_string(p.client.open(g, as_bytes("ctx2"))), "world");
  }
}

TEST(Record, FrameEncoding) {
  auto p = make_pair();
  auto f = p.client.seal(as_bytes("abc"), {});
  auto wire = f.encode();
  EXPECT_EQ(wire.size(), 8 + 3 + kAeadTagSize);
  EXPECT_EQ(RecordFrame::decode(wire), f);
  EXPECT_EQ(error_of([&] { RecordFrame::decode(ByteView(wire).first(23)); }),
            ErrorCode::kMalformedRequest);
}

TEST(Record, NonceAdvances) {
  auto p = make_pair();
  auto a = p.client.seal(as_bytes("same"), {});
  auto b = p.client.seal(as_bytes("same"), {});
  EXPECT_NE(a.ciphertext, b.ciphertext);
  EXPECT_EQ(b.seq, a.seq + 1);
}

TEST(Record, NonceIsIvXorSeq) {
  auto p = make_pair();
  auto kb = p.client.key_block();
  p.client.seal(as_bytes("x"), {});
  auto f = p.client.seal(as_bytes("payload"), as_bytes("c"));
  Bytes nonce = kb.client_write_iv;
  nonce[11] ^= 1;
  Bytes aad(p.client.session_id().begin(), p.client.session_id().end());
  put_u64(aad, 1);
  aad.push_back(1);
  aad.push_back('c');
  auto expected = aead_seal(AeadAlgorithm::kAes128Gcm, kb.client_write_key, nonce, aad,
                            as_bytes("payload"));
  EXPECT_EQ(f.ciphertext, expected);
}

TEST(Record, OverflowSentinel) {
  auto p = make_pair();
  TrustedChannel ch(p.client.session_id(), p.client.key_block(), Role::kClient, kSeqSentinel);
  EXPECT_EQ(error_of([&] { ch.seal(as_bytes("x"), {}); }), ErrorCode::kOverflow);
  EXPECT_TRUE(ch.closed());
  EXPECT_EQ(error_of([&] { ch.seal(as_bytes("x"), {}); }), ErrorCode::kChannelClosed);
}

TEST(Record, TooLarge) {
  auto p = make_pair();
  Bytes big(kMaxRecordPlaintext + 1);
  EXPECT_EQ(error_of([&] { p.client.seal(big, {}); }), ErrorCode::kInvalidArgument);
}

TEST(Record, FlipIsAuthFailureAndCloses) {
  auto p = make_pair();
  auto f = p.client.seal(as_bytes("hello"), {});
  f.ciphertext[0] ^= 1;
  EXPECT_EQ(error_of([&] { p.server.open(f, {}); }), ErrorCode::kAuthFailure);
  EXPECT_TRUE(p.server.closed());
  EXPECT_TRUE(p.server.key_block().concatenated().empty());
  EXPECT_EQ(error_of([&] { p.server.open(f, {}); }), ErrorCode::kChannelClosed);
}

TEST(Record, ReplayIsRejected) {
  auto p = make_pair();
  auto f = p.client.seal(as_bytes("hello"), {});
  p.server.open(f, {});
  EXPECT_EQ(error_of([&] { p.server.open(f, {}); }), ErrorCode::kReplayOrReorder);
  EXPECT_TRUE(p.server.closed());
}

TEST(Record, CrossChannelSplice) {
  auto a = make_pair(CipherSuite::kAes128GcmSha256, 1);
  // Same keys, different session id.
  TrustedChannel other(SessionId{}, a.server.key_block(), Role::kServer);
  auto f = a.client.seal(as_bytes("hello"), {});
  EXPECT_EQ(error_of([&] { other.open(f, {}); }), ErrorCode::kAuthFailure);
}

TEST(Record, ContextAndDirectionBound) {
  auto p = make_pair();
  auto f = p.client.seal(as_bytes("hello"), as_bytes("POST /echo"));
  EXPECT_EQ(error_of([&] { p.server.open(f, as_bytes("POST /upper")); }), ErrorCode::kAuthFailure);
  auto q = make_pair();
  auto g = q.client.seal(as_bytes("hello"), {});
  // Reflection back to the sender.
  EXPECT_EQ(error_of([&] { q.client.open(g, {}); }), ErrorCode::kAuthFailure);
}

TEST(RecordProperty, AnyTamperReplayReorderOrDropClosesBeforeWrongPlaintext) {
  std::mt19937_64 g(99);
  constexpr int kRecords = 10000;
  int closed_runs = 0;
  int false_accepts = 0;
  // Every 100 records start a fresh pair and inject one fault at a random place.
  for (int block = 0; block < kRecords / 100; ++block) {
    auto p = make_pair(kAllCipherSuites[block % 3]);
    std::vector<Bytes> plain;
    std::vector<RecordFrame> frames;
    for (int i = 0; i < 100; ++i) {
      Bytes m(1 + g() % 64);
      for (auto& b : m) b = static_cast<std::uint8_t>(g());
      plain.push_back(m);
      frames.push_back(p.client.seal(m, as_bytes("ctx")));
    }
    std::size_t at = g() % 99;
    // Index into `plain` the receiver should see for each delivered frame.
    std::vector<std::size_t> expected_idx(100);
    for (std::size_t i = 0; i < 100; ++i) expected_idx[i] = i;
    switch (block % 4) {
      case 0: {  // tamper
        auto& ct = frames[at].ciphertext;
        ct[g() % ct.size()] ^= static_cast<std::uint8_t>(1 + g() % 255);
        break;
      }
      case 1:  // replay
        frames.insert(frames.begin() + static_cast<long>(at) + 1, frames[at]);
        expected_idx.insert(expected_idx.begin() + static_cast<long>(at) + 1, at);
        break;
      case 2:  // reorder
        std::swap(frames[at], frames[at + 1]);
        std::swap(expected_idx[at], expected_idx[at + 1]);
        break;
      case 3:  // drop
        frames.erase(frames.begin() + static_cast<long>(at));
        expected_idx.erase(expected_idx.begin() + static_cast<long>(at));
        break;
    }
    bool closed = false;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      try {
        auto out = p.server.open(frames[i], as_bytes("ctx"));
        // Anything accepted must be exactly the i-th record sent.
        if (out != plain[i] || expected_idx[i] != i) ++false_accepts;
      } catch (const Error&) {
        closed = p.server.closed();
        break;
      }
    }
    if (closed) ++closed_runs;
  }
  EXPECT_EQ(false_accepts, 0);
  EXPECT_EQ(closed_runs, kRecords / 100);
}

TEST(Router, HeaderBeatsPrefixAndRoutesBySession) {
  World w;
  SystemRng rng;
  auto tee_a = SimulatedTee::create(as_bytes("echo"), w.pki.tcb, w.pki.quote_roots(), rng);
  auto tee_b = SimulatedTee::create(as_bytes("upper"), w.pki.tcb, w.pki.quote_roots(), rng);
  auto echo = std::make_shared<AttestedHandler>("echo", tee_a, [](ByteView b) {
    return Bytes(b.begin(), b.end());
  });
  auto upper = std::make_shared<AttestedHandler>("upper", tee_b, [](ByteView b) {
    auto s = to_string(b);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return to_bytes(s);
  });
  Router r;
  r.add(RouteKey::header("X-Service", "echo"), echo);
  r.add(RouteKey::path_prefix("/"), upper);
  r.add(RouteKey::path_prefix("/upper"), upper);

  EXPECT_EQ(r.select("/upper/x", {{"X-Service", "echo"}}), echo);
  EXPECT_EQ(r.select("/upper/x", {}), upper);
  EXPECT_EQ(r.handlers().size(), 2u);

  SessionId sid{};
  sid.fill(5);
  auto sessions = [&](const SessionId& id) -> std::optional<Measurement> {
    if (id == sid) return tee_a->measurement();
    return std::nullopt;
  };
  std::vector<Header> hdrs{{"X-Service", "echo"}, {"Attest-Session-Id", b64url_encode(sid)}};
  EXPECT_EQ(r.route("/x", hdrs, sessions), echo);
  EXPECT_EQ(error_of([&] { r.route("/x", {{"X-Service", "echo"}}, sessions); }),
            ErrorCode::kUnknownSession);
  SessionId other{};
  EXPECT_EQ(error_of([&] {
              r.route("/x", {{"Attest-Session-Id", b64url_encode(other)}}, sessions);
            }),
            ErrorCode::kUnknownSession);
  // Session bound to echo's TEE cannot reach the upper handler.
  EXPECT_EQ(error_of([&] {
              r.route("/upper", {{"Attest-Session-Id", b64url_encode(sid)}}, sessions);
            }),
            ErrorCode::kNoRoute);
  Router empty;
  EXPECT_EQ(error_of([&] { empty.select("/", {}); }), ErrorCode::kNoRoute);
}

TEST(Router, HandlerOpensFramesInsideTee) {
  World w;
  auto run = run_handshake(w.client_config(HandshakeMode::kOneWay),
                           w.server_config(HandshakeMode::kOneWay));
  ASSERT_TRUE(run->established());
  bool saw_plaintext = false;
  AttestedHandler h("echo", w.server_tee, [&](ByteView b) {
    saw_plaintext = to_string(b) == "secret body";
    return Bytes(b.begin(), b.end());
  });
  auto req = run->client_channel->seal(as_bytes("secret body"), as_bytes("req"));
  // The untrusted side only ever holds frames.
  auto reply = h.handle(*run->server_channel, req, as_bytes("req"), as_bytes("resp"));
  EXPECT_TRUE(saw_plaintext);
  EXPECT_EQ(to_string(run->client_channel->open(reply, as_bytes("resp"))), "secret body");
}

}  // namespace
}  // namespace httpa
