#pragma once

// Standalone attestation service (POST /verify) and demo key generation.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "httpa/net.hpp"
#include "httpa/verify.hpp"
#include "json.hpp"

namespace httpa {

struct VerifierServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::optional<TlsServerOptions> tls;
  std::string roots_path;        // vendor roots for quotes
  std::string credentials_path;  // the service's own signing identity
  // When set the service runs inside a TEE and attaches its own quote.
  std::optional<std::string> tee_credentials_path;
  std::optional<std::uint64_t> seed;
  std::int64_t now = 1700000000;

  // Keys: host, port, tls_cert, tls_key, roots, credentials, tee_credentials,
  // seed, now. Throws BadConfig.
  static VerifierServiceConfig from_json(const nlohmann::json& j);
};

class VerifierService {
 public:
  // Throws BadConfig.
  explicit VerifierService(VerifierServiceConfig cfg);
  ~VerifierService();

  // Throws BindFailure.
  void start();
  std::uint16_t port() const;
  void stop();

  // 200 with the report, 400 for a malformed body, 404 elsewhere.
  HttpMessage handle(const HttpMessage& req) const;

 private:
  VerifierServiceConfig cfg_;
  std::shared_ptr<Verifier> verifier_;
  std::unique_ptr<HttpListener> listener_;
};

struct KeygenOptions {
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool tls = false;  // also write a self-signed localhost cert and key
};

// Writes roots.json, tcb_credentials.json, verifier_credentials.json and,
// with tls, tls_cert.pem and tls_key.pem. Throws Io.
void keygen(const KeygenOptions& opts);

}  // namespace httpa
