#pragma once

// Record protection for HTTP bodies on an established trusted channel, and
// the untrusted router that picks an attested handler from request metadata.
//
// Record body on the wire: seq(8, big-endian) || AEAD ciphertext || tag.
// nonce = write_iv XOR (0^4 || seq); aad = session_id || seq || sender role || context.

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "httpa/keyschedule.hpp"
#include "httpa/quote.hpp"
#include "httpa/wire.hpp"

namespace httpa {

inline constexpr std::size_t kMaxRecordPlaintext = 16u * 1024u * 1024u;
inline constexpr std::uint64_t kSeqSentinel = UINT64_MAX;

struct RecordFrame {
  std::uint64_t seq = 0;
  Bytes ciphertext;

  Bytes encode() const;
  // Throws MalformedRequest when shorter than seq + tag.
  static RecordFrame decode(ByteView body);
  friend bool operator==(const RecordFrame&, const RecordFrame&) = default;
};

// Single owner per direction. Any failure closes the channel for good.
class TrustedChannel {
 public:
  TrustedChannel(SessionId session_id, KeyBlock key_block, Role role,
                 std::uint64_t seq_send = 0, std::uint64_t seq_recv = 0);

  // Throws ChannelClosed, Overflow, or InvalidArgument above 16 MiB.
  RecordFrame seal(ByteView plaintext, ByteView aad_context);
  // Throws ChannelClosed, ReplayOrReorder or AuthFailure; the latter two close.
  Bytes open(const RecordFrame& frame, ByteView aad_context);

  const SessionId& session_id() const { return session_id_; }
  CipherSuite suite() const { return key_block_.suite; }
  const KeyBlock& key_block() const { return key_block_; }
  Role role() const { return role_; }
  std::uint64_t seq_send() const { return seq_send_; }
  std::uint64_t seq_recv() const { return seq_recv_; }
  bool closed() const { return closed_; }
  void close();

 private:
  Bytes nonce_for(ByteView iv, std::uint64_t seq) const;
  Bytes aad_for(std::uint64_t seq, Role sender, ByteView context) const;

  SessionId session_id_;
  KeyBlock key_block_;
  Role role_;
  std::uint64_t seq_send_;
  std::uint64_t seq_recv_;
  bool closed_ = false;
};

// Runs a request handler inside a TEE. Only ever sees record frames from the
// outside; plaintext exists only within handle().
class AttestedHandler {
 public:
  using Fn = std::function<Bytes(ByteView)>;

  AttestedHandler(std::string name, std::shared_ptr<SimulatedTee> tee, Fn fn);

  const std::string& name() const { return name_; }
  const std::shared_ptr<SimulatedTee>& tee() const { return tee_; }

  RecordFrame handle(TrustedChannel& channel, const RecordFrame& request,
                     ByteView request_context, ByteView response_context) const;

 private:
  std::string name_;
  std::shared_ptr<SimulatedTee> tee_;
  Fn fn_;
};

struct RouteKey {
  enum class Type { kHeader, kPathPrefix };
  Type type;
  std::string name;   // header name (kHeader)
  std::string value;  // header value or path prefix

  static RouteKey header(std::string name, std::string value) {
    return {Type::kHeader, std::move(name), std::move(value)};
  }
  static RouteKey path_prefix(std::string prefix) {
    return {Type::kPathPrefix, {}, std::move(prefix)};
  }
};

// Read-mostly route table; updates swap the whole table.
class Router {
 public:
  using SessionMeasurement = std::function<std::optional<Measurement>(const SessionId&)>;

  void add(RouteKey key, std::shared_ptr<AttestedHandler> handler);

  // Handshake-time selection. Exact header matches beat path prefixes; the
  // longest prefix wins among prefixes. Throws NoRoute.
  std::shared_ptr<AttestedHandler> select(std::string_view path,
                                          const std::vector<Header>& headers) const;

  // Record-time routing. Needs Attest-Session-Id naming a session whose TEE
  // measurement matches the selected handler. Throws UnknownSession or NoRoute.
  std::shared_ptr<AttestedHandler> route(std::string_view path,
                                         const std::vector<Header>& headers,
                                         const SessionMeasurement& session_measurement) const;

  std::vector<std::shared_ptr<AttestedHandler>> handlers() const;

 private:
  struct Entry {
    RouteKey key;
    std::shared_ptr<AttestedHandler> handler;
  };
  using Table = std::vector<Entry>;

  std::shared_ptr<const Table> snapshot() const;

  mutable std::mutex mu_;
  std::shared_ptr<const Table> table_ = std::make_shared<Table>();
};

// Associated-data contexts binding a record to its HTTP request line.
inline Bytes request_record_context(std::string_view method, std::string_view target) {
  auto out = to_bytes(method);
  out.push_back(' ');
  append(out, target);
  return out;
}
inline Bytes response_record_context(std::string_view method, std::string_view target) {
  auto out = to_bytes("response:");
  append(out, request_record_context(method, target));
  return out;
}

// Parses the Attest-Session-Id header value of a record request.
std::optional<SessionId> session_id_from_headers(const std::vector<Header>& headers);

}  // namespace httpa
