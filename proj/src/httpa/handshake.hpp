#pragma once

// Client and server handshake state machines (one-way and mutual), the
// handshake transcript, session tickets and the server session cache.
//
// Message flow, each row one HTTP exchange:
//   OPTIONS  Access-Control-Request-Method: ATTEST   ->  200 Allow: ATTEST
//   ATTEST   random, suites [, client quote+pubkey]  ->  200 quote, pubkey, random, id, suite
//   ATTEST   id, secret wrapped to server TEE        ->  200 id, confirmation [, server secret]
//
// Transcript hash = SHA-256 over every canonical message, each prefixed by
// its 4-byte length. The client's secret is wrapped under the hash through
// the attest response; the confirmation MAC (and, in mutual mode, the
// server's wrapped secret) uses the hash through the trusted-session request.

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "httpa/clock.hpp"
#include "httpa/keyschedule.hpp"
#include "httpa/record.hpp"
#include "httpa/verify.hpp"
#include "httpa/wire.hpp"
#include "json.hpp"

namespace httpa {

class Rng;

inline constexpr std::uint32_t kDefaultQuoteMaxAge = 300;
inline constexpr std::int64_t kMaxMutualDateSkew = 600;

enum class FailureReason {
  kNotAttestable,
  kQuoteRejected,
  kPolicyRejected,
  kNoCommonSuite,
  kConfirmationMismatch,
  kServerRejected,
  kClientQuoteRejected,
  kStaleDate,
  kBadSecret,
  kModeMismatch,
  kMalformed,
};

std::string_view failure_reason_name(FailureReason reason);

struct Failure {
  FailureReason reason;
  std::string detail;
};

struct HandshakeConfig {
  HandshakeMode mode = HandshakeMode::kOneWay;
  std::vector<CipherSuite> suites{kAllCipherSuites.begin(), kAllCipherSuites.end()};
  Policy policy;
  // Honour the quote's max-age as the session ticket lifetime; when false
  // tickets are never resumable.
  bool quote_cache_respect = true;
  std::shared_ptr<const Clock> clock;
  std::shared_ptr<Rng> rng;
  // Client: judges the server quote. Server: judges client quotes (mutual).
  std::shared_ptr<QuoteVerifier> verifier;
  // When set, verification reports must chain to these roots; otherwise the
  // report signature is checked against the embedded verifier certificate.
  std::optional<TrustStore> verifier_roots;
  // Server: the TEE being attested. Client: its own TEE (mutual only).
  std::shared_ptr<SimulatedTee> tee;
  // Server only.
  std::uint32_t quote_max_age = kDefaultQuoteMaxAge;
  // Client only: domain identity taken from the transport, if any.
  std::optional<std::string> peer_domain;

  // Throws BadConfig.
  void validate(Role role) const;
};

struct TranscriptEntry {
  MessageKind kind;
  Bytes bytes;
};

class Transcript {
 public:
  void add(MessageKind kind, const HttpMessage& canonical);
  Digest hash() const { return hash_.snapshot(); }
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  std::vector<MessageKind> kinds() const;
  // u32 length || bytes, per entry in order.
  Bytes serialize() const;

 private:
  Sha256 hash_;
  std::vector<TranscriptEntry> entries_;
};

struct SessionTicket {
  SessionId session_id{};
  KeyBlock key_block;
  Timestamp created_at{};
  std::uint32_t max_age = 0;
  IdentityBundle peer;
  std::uint64_t seq_send = 0;
  std::uint64_t seq_recv = 0;

  CipherSuite suite() const { return key_block.suite; }
  bool expired(Timestamp now) const {
    return now > created_at + std::chrono::seconds(max_age);
  }
  nlohmann::json to_json() const;
  static SessionTicket from_json(const nlohmann::json& j);
};

enum class ClientPhase { kStart, kAwaitingPreflight, kAttestSent, kSecretSent, kEstablished, kFailed };
enum class ServerPhase { kStart, kPreflightDone, kAttestAnswered, kEstablished, kFailed };

std::string_view client_phase_name(ClientPhase phase);
std::string_view server_phase_name(ServerPhase phase);

using ClientStep = std::variant<HttpMessage, Failure>;
using ClientFinish = std::variant<TrustedChannel, Failure>;
using ServerStep = std::variant<HttpMessage, Failure>;

// Single owner. Calling an operation out of order throws WrongState and
// leaves the machine Failed; a Failed machine emits nothing further.
class ClientHandshake {
 public:
  explicit ClientHandshake(HandshakeConfig cfg);

  HttpMessage begin();
  ClientStep on_preflight_response(const HttpMessage& resp);
  ClientStep on_attest_response(const HttpMessage& resp);
  ClientStep on_attest_response(const AttestResponse& resp);
  ClientFinish on_session_response(const HttpMessage& resp);
  ClientFinish on_session_response(const TrustedSessionResponse& resp);

  // Reuses an unexpired ticket without any ATTEST exchange. Throws
  // TicketExpired, or PolicyRejected when the stored identities no longer
  // satisfy cfg.policy.
  static TrustedChannel resume(const HandshakeConfig& cfg, const SessionTicket& ticket);

  ClientPhase phase() const { return phase_; }
  const std::optional<Failure>& failure() const { return failure_; }
  const Transcript& transcript() const { return transcript_; }
  const std::optional<VerificationReport>& server_report() const { return report_; }
  const IdentityBundle& peer_identities() const { return peer_; }
  // Available once established.
  const std::optional<SessionTicket>& ticket() const { return ticket_; }

 private:
  void require(ClientPhase expected);
  Failure fail(FailureReason reason, std::string detail);

  HandshakeConfig cfg_;
  ClientPhase phase_ = ClientPhase::kStart;
  std::optional<Failure> failure_;
  Transcript transcript_;
  Random32 client_random_{};
  Random32 server_random_{};
  SessionId session_id_{};
  CipherSuite suite_ = CipherSuite::kAes128GcmSha256;
  std::uint32_t max_age_ = 0;
  std::vector<CipherSuiteId> offered_;
  std::optional<PreSessionSecret> client_secret_;
  Digest session_hash_{};
  std::optional<VerificationReport> report_;
  IdentityBundle peer_;
  std::optional<SessionTicket> ticket_;
};

// Single owner, one per connection.
class ServerHandshake {
 public:
  explicit ServerHandshake(HandshakeConfig cfg);

  ServerStep on_message(const HttpMessage& msg);
  ServerStep on_message(const AttestMessage& msg);

  ServerPhase phase() const { return phase_; }
  const std::optional<Failure>& failure() const { return failure_; }
  const Transcript& transcript() const { return transcript_; }
  const std::shared_ptr<SimulatedTee>& tee() const { return cfg_.tee; }
  std::uint32_t max_age() const { return cfg_.quote_max_age; }
  // Client identities (mutual mode only).
  const std::optional<IdentityBundle>& peer_identities() const { return peer_; }
  // Available once established; moves the channel out.
  std::optional<TrustedChannel> take_channel();
  std::vector<MessageKind> emitted() const { return emitted_; }

 private:
  ServerStep on_preflight();
  ServerStep on_attest_request(const AttestRequest& req);
  ServerStep on_session_request(const TrustedSessionRequest& req);
  void require(ServerPhase expected);
  Failure fail(FailureReason reason, std::string detail);
  HttpMessage emit(const AttestMessage& msg);

  HandshakeConfig cfg_;
  ServerPhase phase_ = ServerPhase::kStart;
  std::optional<Failure> failure_;
  Transcript transcript_;
  Random32 client_random_{};
  Random32 server_random_{};
  SessionId session_id_{};
  CipherSuite suite_ = CipherSuite::kAes128GcmSha256;
  std::optional<Bytes> client_pubkey_;
  std::optional<IdentityBundle> peer_;
  std::optional<TrustedChannel> channel_;
  std::vector<MessageKind> emitted_;
};

// Server-side state of one established trusted session.
struct ServerSession {
  std::mutex mu;
  TrustedChannel channel;
  Timestamp created_at;
  std::uint32_t max_age;
  std::optional<IdentityBundle> peer;
  Measurement measurement;

  ServerSession(TrustedChannel ch, Timestamp created, std::uint32_t age,
                std::optional<IdentityBundle> p, Measurement m)
      : channel(std::move(ch)), created_at(created), max_age(age), peer(std::move(p)),
        measurement(m) {}
  bool expired(Timestamp now) const {
    return now > created_at + std::chrono::seconds(max_age);
  }
};

// Bounded LRU keyed by session id; each entry lives for its quote max-age.
// All operations are atomic with respect to each other.
class SessionCache {
 public:
  explicit SessionCache(std::size_t capacity);

  void put(std::shared_ptr<ServerSession> session);
  // nullptr on miss; expired entries are evicted and reported as a miss.
  std::shared_ptr<ServerSession> get(const SessionId& id, Timestamp now);
  // Throws FullHandshakeRequired on miss or expiry.
  std::shared_ptr<ServerSession> lookup(const SessionId& id, Timestamp now);
  void erase(const SessionId& id);
  void clear();
  std::size_t size() const;

 private:
  struct IdHash {
    std::size_t operator()(const SessionId& id) const noexcept;
  };
  using Lru = std::list<std::shared_ptr<ServerSession>>;

  std::size_t capacity_;
  mutable std::mutex mu_;
  Lru order_;  // front = most recent
  std::unordered_map<SessionId, Lru::iterator, IdHash> index_;
};

}  // namespace httpa
