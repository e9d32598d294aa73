#pragma once

// Quote verification, signed verification reports, and allow/deny policy
// evaluation over the four peer identities.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "httpa/bytes.hpp"
#include "httpa/cert.hpp"
#include "httpa/clock.hpp"
#include "httpa/quote.hpp"
#include "json.hpp"

namespace httpa {

enum class IdentityKind { kDomain, kTcb, kVendor, kVerifier };

inline constexpr std::array<IdentityKind, 4> kAllIdentityKinds = {
    IdentityKind::kDomain, IdentityKind::kTcb, IdentityKind::kVendor,
    IdentityKind::kVerifier};

std::string_view identity_kind_name(IdentityKind kind);
std::optional<IdentityKind> identity_kind_from_name(std::string_view name);

struct IdentityBundle {
  std::optional<std::string> domain;
  Measurement tcb{};
  std::optional<std::string> vendor;
  std::optional<std::string> verifier;

  // Policy-comparable value; the TCB identity is lowercase hex.
  std::optional<std::string> value_of(IdentityKind kind) const;
  nlohmann::json to_json() const;
  static IdentityBundle from_json(const nlohmann::json& j);

  friend bool operator==(const IdentityBundle&, const IdentityBundle&) = default;
};

struct Selector {
  IdentityKind kind;
  std::string value;
  friend auto operator<=>(const Selector&, const Selector&) = default;
};

class Policy {
 public:
  Policy() = default;
  // Throws InvalidPolicy if a selector is both allowed and denied.
  Policy(std::set<Selector> allowed, std::set<Selector> denied);

  // {"allowed":[{"kind":"vendor","value":"..."}],"denied":[...]}
  static Policy from_json(const nlohmann::json& j);
  static Policy load(const std::string& path);
  nlohmann::json to_json() const;

  const std::set<Selector>& allowed() const { return allowed_; }
  const std::set<Selector>& denied() const { return denied_; }

 private:
  std::set<Selector> allowed_;
  std::set<Selector> denied_;
};

struct PolicyDecision {
  bool accepted = true;
  // On rejection: the denied selector that matched, or the identity that
  // missed its allow list.
  std::optional<Selector> selector;
  bool denied = false;

  std::string describe() const;
};

// Deny overrides allow. An empty allow list admits everything not denied;
// otherwise each present identity whose kind has allow entries must match one.
// Absent identities are skipped.
PolicyDecision evaluate_policy(const IdentityBundle& bundle, const Policy& policy);

enum class FailReason : std::uint8_t {
  kNone = 0,
  kMalformed = 1,
  kBadVersion = 2,
  kBadChain = 3,
  kVendorMismatch = 4,
  kFingerprintMismatch = 5,
  kUntrustedVerifier = 6,
};

std::string_view fail_reason_name(FailReason reason);

struct Verdict {
  FailReason reason = FailReason::kNone;
  std::string detail;

  bool pass() const { return reason == FailReason::kNone; }
  static Verdict ok() { return {}; }
  static Verdict fail(FailReason r, std::string d = {}) { return {r, std::move(d)}; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct QuoteCheck {
  Verdict verdict;
  IdentityBundle bundle;
};

// Pure function of its inputs. Pass iff the chain validates to roots, the
// quote signature verifies under the chain leaf, the vendor id matches the
// vendor certificate, and report_data binds expected_pubkey.
QuoteCheck check_quote(const Quote& quote, const TrustStore& roots, ByteView expected_pubkey);
QuoteCheck check_quote_bytes(ByteView quote, const TrustStore& roots, ByteView expected_pubkey);

// Serialized as len16-prefixed fields in declaration order; the signature
// covers the encoded verdict, bundle and timestamp fields. verifier_chain
// follows the signature so the client can validate the signer.
struct VerificationReport {
  Verdict verdict;
  IdentityBundle bundle;
  std::optional<Quote> verifier_quote;
  Timestamp timestamp{};
  Bytes signature;
  std::vector<Certificate> verifier_chain;

  Bytes signed_payload() const;
  Bytes encode() const;
  // Throws MalformedRequest.
  static VerificationReport decode(ByteView bytes);

  // Signature valid under the chain leaf and the chain validates to roots.
  bool authentic(const TrustStore& verifier_roots) const;
  // Signature valid under the chain leaf only (self-issued in-process verifier).
  bool signature_valid() const;

  friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

// Stateless after construction.
class Verifier {
 public:
  Verifier(Credentials identity, TrustStore quote_roots, std::shared_ptr<const Clock> clock,
           std::shared_ptr<const SimulatedTee> tee = nullptr);

  // A verifier with a throwaway self-signed identity, for in-process checks.
  static std::shared_ptr<Verifier> in_process(const std::string& name, TrustStore quote_roots,
                                              std::shared_ptr<const Clock> clock, Rng& rng);

  VerificationReport verify_quote(const Quote& quote, ByteView expected_pubkey) const;
  VerificationReport verify_quote_bytes(ByteView quote, ByteView expected_pubkey) const;

  const std::string& name() const { return identity_.leaf().subject; }
  const std::vector<Certificate>& chain() const { return identity_.chain; }
  const TrustStore& roots() const { return roots_; }

 private:
  VerificationReport sign(QuoteCheck check) const;

  Credentials identity_;
  TrustStore roots_;
  std::shared_ptr<const Clock> clock_;
  std::shared_ptr<const SimulatedTee> tee_;
};

// POST /verify body: quote bytes || pubkey_len(2) || pubkey.
Bytes encode_verify_request(ByteView quote, ByteView pubkey);
// Returns the serialized report. Throws MalformedRequest.
Bytes attestation_service_handle(const Verifier& verifier, ByteView request);

// Client-side seam for in-process or remote verification.
class QuoteVerifier {
 public:
  virtual ~QuoteVerifier() = default;
  virtual VerificationReport verify(ByteView quote, ByteView expected_pubkey) = 0;
};

class LocalQuoteVerifier final : public QuoteVerifier {
 public:
  explicit LocalQuoteVerifier(std::shared_ptr<const Verifier> verifier)
      : verifier_(std::move(verifier)) {}
  VerificationReport verify(ByteView quote, ByteView expected_pubkey) override {
    return verifier_->verify_quote_bytes(quote, expected_pubkey);
  }

 private:
  std::shared_ptr<const Verifier> verifier_;
};

}  // namespace httpa
