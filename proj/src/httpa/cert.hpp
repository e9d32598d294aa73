#pragma once

// Minimal certificate format used for vendor, TCB-signing and verifier
// identities. Layout (all lengths big-endian):
//
//   version(1) = 1
//   subject    len16 || utf-8
//   issuer     len16 || utf-8
//   public_key 32 (Ed25519)
//   is_ca      1 (0 or 1)
//   signature  64, issuer's Ed25519 signature over every preceding byte
//
// Decoding is strict: any trailing byte or out-of-range flag is rejected.

#include <optional>
#include <string>
#include <vector>

#include "httpa/bytes.hpp"
#include "httpa/crypto.hpp"

namespace httpa {

struct Certificate {
  std::string subject;
  std::string issuer;
  PublicKey32 public_key{};
  bool is_ca = false;
  Signature64 signature{};

  Bytes to_be_signed() const;
  Bytes encode() const;
  static Certificate decode(ByteView der);

  bool self_signed() const;

  friend bool operator==(const Certificate&, const Certificate&) = default;
};

Certificate issue_certificate(std::string subject, const PublicKey32& subject_key,
                              bool is_ca, const std::string& issuer_name,
                              const SigningKey& issuer_key);

// Self-signed trust anchors.
class TrustStore {
 public:
  TrustStore() = default;
  explicit TrustStore(std::vector<Certificate> roots);

  void add(Certificate root);
  const std::vector<Certificate>& roots() const { return roots_; }
  bool empty() const { return roots_.empty(); }

  // chain is leaf first. Each certificate must be signed by the next; the last
  // must be signed by a root whose subject equals its issuer. Every issuing
  // certificate inside the chain must be a CA.
  bool validates(const std::vector<Certificate>& chain) const;

 private:
  std::vector<Certificate> roots_;
};

// A signing key plus the chain certifying it (leaf first).
struct Credentials {
  SigningKey key;
  std::vector<Certificate> chain;

  const Certificate& leaf() const { return chain.front(); }
};

// JSON: {"signing_key": b64url(seed), "chain": [b64url(cert), ...]}
Credentials load_credentials(const std::string& path);
void save_credentials(const std::string& path, const Credentials& creds);

// JSON: {"roots": [b64url(cert), ...]}
TrustStore load_trust_store(const std::string& path);
void save_trust_store(const std::string& path, const TrustStore& store);

}  // namespace httpa
