#pragma once

// HTTPA client: preflight + two ATTEST exchanges on one keep-alive
// connection, then the request body sealed as a record. Established sessions
// are kept as tickets (optionally in a file) and reused until max-age.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "httpa/handshake.hpp"
#include "httpa/net.hpp"
#include "json.hpp"

namespace httpa {

// A handshake that ended in a Failure verdict.
class HandshakeError : public Error {
 public:
  explicit HandshakeError(Failure f)
      : Error(ErrorCode::kHandshakeFailed,
              std::string(failure_reason_name(f.reason)) + (f.detail.empty() ? "" : ": " + f.detail)),
        failure_(std::move(f)) {}
  const Failure& failure() const { return failure_; }

 private:
  Failure failure_;
};

// Posts quotes to an attestation service at POST /verify.
class RemoteQuoteVerifier final : public QuoteVerifier {
 public:
  RemoteQuoteVerifier(Url url, std::optional<TlsClientOptions> tls);
  // Throws Transport or MalformedRequest.
  VerificationReport verify(ByteView quote, ByteView expected_pubkey) override;

 private:
  Url url_;
  std::optional<TlsClientOptions> tls_;
};

struct ClientConfig {
  std::string url;
  HandshakeMode mode = HandshakeMode::kOneWay;
  std::optional<std::string> policy_path;
  std::string roots_path;  // vendor roots, plus verifier roots for a remote verifier
  std::vector<CipherSuite> suites{kAllCipherSuites.begin(), kAllCipherSuites.end()};
  std::optional<std::string> verifier_url;
  std::optional<std::string> session_cache_path;
  std::optional<std::string> credentials_path;  // mutual mode: client TEE vendor key
  std::optional<std::string> tls_ca_path;
  std::optional<std::string> service;  // sent as X-Service
  std::optional<std::uint64_t> seed;
  std::int64_t now = 1700000000;  // seed mode clock
  bool test_mode = false;
  std::optional<std::string> transcript_path;
  bool quote_cache_respect = true;

  // Keys: url, mode, policy, roots, suites, verifier_url, session_cache,
  // credentials, tls_ca, service, seed, now, test_mode, transcript,
  // quote_cache_respect. Throws BadConfig.
  static ClientConfig from_json(const nlohmann::json& j);
  // Throws BadConfig.
  void validate() const;
};

struct ClientResponse {
  int status = 0;
  Bytes body;
  nlohmann::json report;  // identities, verdict, handshake, mode, suite, session_id
};

class HttpaClient {
 public:
  using Tamper = std::function<void(MessageKind, HttpMessage&)>;

  explicit HttpaClient(ClientConfig cfg, std::shared_ptr<const Clock> clock = nullptr);

  // Throws HandshakeError, PolicyRejected, Transport, or a record error.
  ClientResponse request(ByteView body, const std::string& method = "POST");

  // Test seam: edits each handshake message just before it is sent.
  void set_tamper(Tamper t) { tamper_ = std::move(t); }
  // "METHOD target" of every request written, in order.
  const std::vector<std::string>& wire_log() const { return wire_; }
  std::size_t attest_messages_sent() const;
  // Transcript of the most recent full handshake.
  const std::optional<Transcript>& last_transcript() const { return transcript_; }
  void forget_sessions();

 private:
  HandshakeConfig handshake_config(const std::optional<std::string>& peer_domain) const;
  std::string cache_key() const;
  void load_cache();
  void save_cache() const;
  HttpMessage send(HttpConnection& conn, HttpMessage msg, std::optional<MessageKind> kind);
  HttpConnection& connection();
  std::pair<TrustedChannel, SessionTicket> full_handshake();
  // nullopt when the server no longer knows the session.
  std::optional<ClientResponse> exchange(TrustedChannel& channel, ByteView body,
                                         const std::string& method);

  ClientConfig cfg_;
  Url url_;
  std::optional<TlsClientOptions> tls_;
  std::shared_ptr<const Clock> clock_;
  std::shared_ptr<Rng> rng_;
  std::shared_ptr<QuoteVerifier> verifier_;
  std::optional<TrustStore> verifier_roots_;
  std::shared_ptr<SimulatedTee> tee_;
  Policy policy_;
  std::map<std::string, SessionTicket> tickets_;
  std::unique_ptr<HttpConnection> conn_;
  Tamper tamper_;
  std::vector<std::string> wire_;
  std::optional<Transcript> transcript_;
};

}  // namespace httpa
