#pragma once

// Attestation quotes and the simulated TEE that produces them.
//
// Serialized quote layout (big-endian integers):
//   version(2) || measurement(32) || vendor_id(16) || report_data(64)
//   || sig_len(2) || signature || chain_len(2) || chain_len x (len16 || cert)
//
// The signature is made by the TCB signing key over the first 114 bytes.
// report_data[0..32] is SHA-256 of the bound public key; [32..64] is zero.
// cert_chain is leaf first: TCB signing cert, then vendor signing cert.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "httpa/bytes.hpp"
#include "httpa/cert.hpp"
#include "httpa/crypto.hpp"
#include "httpa/kem.hpp"

namespace httpa {

class Rng;

inline constexpr std::uint16_t kQuoteVersion = 1;
inline constexpr std::size_t kQuoteFixedPrefix = 2 + 32 + 16 + 64 + 2;

using Measurement = std::array<std::uint8_t, 32>;
using VendorId = std::array<std::uint8_t, 16>;
using ReportData = std::array<std::uint8_t, 64>;

struct Quote {
  std::uint16_t version = kQuoteVersion;
  Measurement measurement{};
  VendorId vendor_id{};
  ReportData report_data{};
  Bytes signature;
  std::vector<Certificate> cert_chain;

  Bytes signed_prefix() const;
  Bytes encode() const;
  // Throws TruncatedQuote, BadVersion or MalformedQuote.
  static Quote decode(ByteView bytes);

  friend bool operator==(const Quote&, const Quote&) = default;
};

Bytes quote_encode(const Quote& quote);
Quote quote_decode(ByteView bytes);

ReportData report_data_for(ByteView bound_public_key);
// First 16 bytes of SHA-256 over the vendor signing certificate's key.
VendorId vendor_id_for(const Certificate& vendor_signing_cert);

// True when the quote's signature verifies under its own leaf certificate.
// Chain validation against trust anchors lives in the verify module.
bool verify_quote_signature(const Quote& quote);

// A software stand-in for an enclave. Owns an X25519 keypair whose private
// half is reachable only through unwrap_secret(); nothing returns it.
class SimulatedTee {
 public:
  // Throws BadVendorCredentials unless vendor_credentials is a TCB signing
  // key whose chain (TCB cert, vendor signing cert) validates to vendor_roots.
  static std::shared_ptr<SimulatedTee> create(ByteView code_identity,
                                              Credentials vendor_credentials,
                                              const TrustStore& vendor_roots, Rng& rng);

  SimulatedTee(const SimulatedTee&) = delete;
  SimulatedTee& operator=(const SimulatedTee&) = delete;

  const Measurement& measurement() const { return measurement_; }
  const PublicKey32& public_key() const { return kem_.public_key(); }
  const std::vector<Certificate>& vendor_chain() const { return creds_.chain; }

  // Quote binding this TEE's KEM public key.
  Quote generate_quote() const;
  // Quote binding some other key generated inside this TEE (e.g. a verifier
  // report-signing key).
  Quote generate_quote_binding(ByteView public_value) const;

  // nullopt on any failure (wrong key, wrong transcript hash, tampering).
  std::optional<std::array<std::uint8_t, 32>> unwrap_secret(const WrappedSecret& wrapped,
                                                            ByteView transcript_hash) const;

  // Handshake randoms handed in by the untrusted host.
  void provide_randoms(ByteView client_random, ByteView server_random);
  std::uint64_t randoms_received() const;

  // Runs fn inside the TEE's serialization domain.
  Bytes execute(const std::function<Bytes(ByteView)>& fn, ByteView input) const;

 private:
  SimulatedTee(Measurement m, Credentials creds, KemKeyPair kem);

  Measurement measurement_;
  Credentials creds_;
  KemKeyPair kem_;
  mutable std::mutex mu_;
  std::uint64_t randoms_received_ = 0;
};

}  // namespace httpa
