#pragma once

// Demo credential hierarchy used by keygen and by tests:
//   vendor root (CA) -> vendor signing (CA) -> TCB signing key
//   verifier root (CA) -> attestation service key

#include "httpa/cert.hpp"

namespace httpa {

class Rng;

inline constexpr const char* kDemoVendorRoot = "CN=HTTPA Demo Vendor Root";
inline constexpr const char* kDemoVendor = "CN=HTTPA Demo Vendor,O=Demo Vendor";
inline constexpr const char* kDemoTcbSigning = "CN=HTTPA Demo TCB Signing";
inline constexpr const char* kDemoVerifierRoot = "CN=HTTPA Demo Verifier Root";
inline constexpr const char* kDemoVerifier = "CN=HTTPA Demo Attestation Service";

struct DemoPki {
  Certificate vendor_root;
  Certificate verifier_root;
  Credentials tcb;       // chain: TCB signing, vendor signing
  Credentials verifier;  // chain: attestation service

  TrustStore quote_roots() const { return TrustStore({vendor_root}); }
  TrustStore verifier_roots() const { return TrustStore({verifier_root}); }
  // Both roots, as written to roots.json.
  TrustStore all_roots() const { return TrustStore({vendor_root, verifier_root}); }
};

DemoPki make_demo_pki(Rng& rng);

}  // namespace httpa
