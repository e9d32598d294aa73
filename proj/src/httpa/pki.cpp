#include "httpa/pki.hpp"

#include "httpa/rng.hpp"

namespace httpa {

DemoPki make_demo_pki(Rng& rng) {
  auto vendor_root_key = SigningKey::generate(rng);
  auto vendor_key = SigningKey::generate(rng);
  auto tcb_key = SigningKey::generate(rng);
  auto verifier_root_key = SigningKey::generate(rng);
  auto verifier_key = SigningKey::generate(rng);

  DemoPki pki{
      issue_certificate(kDemoVendorRoot, vendor_root_key.public_key(), true, kDemoVendorRoot,
                        vendor_root_key),
      issue_certificate(kDemoVerifierRoot, verifier_root_key.public_key(), true,
                        kDemoVerifierRoot, verifier_root_key),
      Credentials{tcb_key, {}},
      Credentials{verifier_key, {}},
  };
  auto vendor_cert =
      issue_certificate(kDemoVendor, vendor_key.public_key(), true, kDemoVendorRoot, vendor_root_key);
  pki.tcb.chain = {issue_certificate(kDemoTcbSigning, tcb_key.public_key(), false, kDemoVendor,
                                     vendor_key),
                   vendor_cert};
  pki.verifier.chain = {issue_certificate(kDemoVerifier, verifier_key.public_key(), false,
                                          kDemoVerifierRoot, verifier_root_key)};
  return pki;
}

}  // namespace httpa
