#pragma once

// HTTPA server: answers preflight and ATTEST on every connection, caches
// established sessions, and serves protected record requests through the
// router to demo handlers, each running in its own simulated TEE.
//
// Status codes outside the handshake:
//   400  malformed request, or a handshake message out of order
//   403  handshake aborted (the connection is closed)
//   404  no route
//   428  unknown or expired session; the client must start over at preflight

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "httpa/handshake.hpp"
#include "httpa/net.hpp"
#include "json.hpp"

namespace httpa {

inline constexpr std::int64_t kDefaultSeedEpoch = 1700000000;

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::optional<TlsServerOptions> tls;
  HandshakeMode mode = HandshakeMode::kOneWay;
  // Demo handler names; each gets the route "/name" and "X-Service: name".
  std::vector<std::string> handlers = {"echo", "upper", "sha256"};
  std::string credentials_path;
  std::string roots_path;
  std::optional<std::string> policy_path;  // client identities, mutual mode
  std::uint32_t max_age = kDefaultQuoteMaxAge;
  std::vector<CipherSuite> suites{kAllCipherSuites.begin(), kAllCipherSuites.end()};
  std::size_t session_capacity = 1024;
  std::optional<std::uint64_t> seed;
  std::int64_t now = kDefaultSeedEpoch;  // seed mode clock
  bool test_mode = false;
  std::optional<std::string> transcript_path;

  // Keys as in the CLI flags: host, port, tls_cert, tls_key, mode, handlers,
  // credentials, roots, policy, max_age, suites, session_capacity, seed, now,
  // test_mode, transcript. Throws BadConfig.
  static ServerConfig from_json(const nlohmann::json& j);
  // Throws BadConfig.
  void validate() const;
};

// One line of the server's message trace.
struct TraceEvent {
  std::uint64_t connection;
  std::string what;  // "recv AttestRequest", "send 403", "close", ...
};

class HttpaServer {
 public:
  // clock defaults to a fixed clock in seed mode and the system clock otherwise.
  explicit HttpaServer(ServerConfig cfg, std::shared_ptr<const Clock> clock = nullptr);
  ~HttpaServer();

  void start();
  std::uint16_t port() const;
  void stop();

  struct Stats {
    std::uint64_t preflights = 0;
    std::uint64_t attest_requests = 0;
    std::uint64_t established = 0;
    std::uint64_t aborted = 0;
    std::uint64_t records = 0;
  };
  Stats stats() const;
  std::vector<TraceEvent> trace() const;
  SessionCache& sessions() { return *sessions_; }
  const ServerConfig& config() const { return cfg_; }

 private:
  class Connection;
  friend class Connection;

  RequestHandler make_connection();
  HandshakeConfig handshake_config(std::shared_ptr<SimulatedTee> tee) const;
  void record_trace(std::uint64_t conn, std::string what);

  ServerConfig cfg_;
  std::shared_ptr<const Clock> clock_;
  std::shared_ptr<Rng> rng_;
  std::shared_ptr<QuoteVerifier> client_verifier_;
  Policy client_policy_;
  Router router_;
  std::shared_ptr<SessionCache> sessions_;
  std::unique_ptr<HttpListener> listener_;

  mutable std::mutex mu_;
  Stats stats_;
  std::vector<TraceEvent> trace_;
  std::uint64_t next_connection_ = 1;
};

// Throws BadConfig on an unknown token.
std::vector<CipherSuite> parse_suite_list(const std::vector<std::string>& tokens);

// Demo handler bodies.
Bytes demo_handler(const std::string& name, ByteView body);

}  // namespace httpa
