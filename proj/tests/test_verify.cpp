#include <gtest/gtest.h>

#include "golden.hpp"
#include "support.hpp"

namespace httpa {
namespace {

using test::World;

TEST(Verify, HappyPath) {
  World w;
  auto q = w.server_tee->generate_quote();
  auto rep = w.verifier->verify_quote(q, w.server_tee->public_key());
  EXPECT_TRUE(rep.verdict.pass()) << rep.verdict.detail;
  EXPECT_EQ(rep.bundle.tcb, w.server_tee->measurement());
  EXPECT_EQ(rep.bundle.vendor, std::string(kDemoVendor));
  EXPECT_EQ(rep.bundle.verifier, std::string(kDemoVerifier));
  EXPECT_FALSE(rep.bundle.domain);
  EXPECT_TRUE(rep.authentic(w.pki.verifier_roots()));
}

TEST(Verify, FlippedPubkeyIsFingerprintMismatch) {
  World w;
  auto q = w.server_tee->generate_quote();
  auto pk = to_vector(w.server_tee->public_key());
  pk[5] ^= 1;
  auto rep = w.verifier->verify_quote(q, pk);
  EXPECT_EQ(rep.verdict.reason, FailReason::kFingerprintMismatch);
}

TEST(Verify, FlippedSignatureIsBadChain) {
  World w(1);
  auto bytes = w.server_tee->generate_quote().encode();
  bytes[116 + 10] ^= 0x80;
  auto rep = w.verifier->verify_quote_bytes(bytes, w.server_tee->public_key());
  EXPECT_EQ(rep.verdict.reason, FailReason::kBadChain);
}

TEST(Verify, ForeignVendorIsBadChain) {
  World w;
  SeededRng other(77, "setup");
  auto foreign = make_demo_pki(other);
  auto tee = SimulatedTee::create(as_bytes("x"), foreign.tcb, foreign.quote_roots(), other);
  auto rep = w.verifier->verify_quote(tee->generate_quote(), tee->public_key());
  EXPECT_EQ(rep.verdict.reason, FailReason::kBadChain);
}

TEST(Verify, VerdictIsPureFunctionOfInputs) {
  World w;
  auto q = w.server_tee->generate_quote().encode();
  auto a = check_quote_bytes(q, w.pki.quote_roots(), w.server_tee->public_key());
  auto b = check_quote_bytes(q, w.pki.quote_roots(), w.server_tee->public_key());
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.bundle, b.bundle);
}

TEST(Verify, ReportRoundTripAndSignature) {
  World w;
  auto rep = w.verifier->verify_quote(w.server_tee->generate_quote(), w.server_tee->public_key());
  auto back = VerificationReport::decode(rep.encode());
  EXPECT_EQ(back, rep);
  EXPECT_TRUE(back.signature_valid());
  back.bundle.vendor = "CN=Someone Else";
  EXPECT_FALSE(back.signature_valid());
}

TEST(Verify, ReportFromUntrustedVerifierNotAuthentic) {
  World w;
  SystemRng rng;
  auto rogue = Verifier::in_process("CN=Rogue Verifier", w.pki.quote_roots(), w.clock, rng);
  auto rep = rogue->verify_quote(w.server_tee->generate_quote(), w.server_tee->public_key());
  EXPECT_TRUE(rep.verdict.pass());
  EXPECT_TRUE(rep.signature_valid());
  EXPECT_FALSE(rep.authentic(w.pki.verifier_roots()));
}

TEST(Verify, ServiceHandlesGoldenQuote) {
  World w(1);
  auto frozen = test::read_file(test::data_path("golden/quote.bin"));
  ASSERT_TRUE(frozen);
  auto body = encode_verify_request(*frozen, w.server_tee->public_key());
  auto rep = VerificationReport::decode(attestation_service_handle(*w.verifier, body));
  EXPECT_TRUE(rep.verdict.pass()) << rep.verdict.detail;
  EXPECT_TRUE(rep.authentic(w.pki.verifier_roots()));
}

TEST(Verify, ServiceRejectsTruncatedBody) {
  World w;
  auto body = encode_verify_request(w.server_tee->generate_quote().encode(),
                                    w.server_tee->public_key());
  for (std::size_t n : {std::size_t{0}, std::size_t{10}, body.size() - 1}) {
    try {
      attestation_service_handle(*w.verifier, ByteView(body).first(n));
      ADD_FAILURE() << "accepted " << n << " bytes";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedRequest);
    }
  }
}

TEST(Verify, VerifierInTeeAttachesQuote) {
  World w;
  auto v = std::make_shared<Verifier>(w.pki.verifier, w.pki.quote_roots(), w.clock, w.client_tee);
  auto rep = v->verify_quote(w.server_tee->generate_quote(), w.server_tee->public_key());
  ASSERT_TRUE(rep.verifier_quote);
  auto check = check_quote(*rep.verifier_quote, w.pki.quote_roots(),
                           w.pki.verifier.key.public_key());
  EXPECT_TRUE(check.verdict.pass());
  EXPECT_EQ(VerificationReport::decode(rep.encode()), rep);
}

IdentityBundle sample_bundle() {
  IdentityBundle b;
  b.domain = "example.test";
  b.tcb.fill(0x11);
  b.vendor = "CN=Vendor";
  b.verifier = "CN=Verifier";
  return b;
}

TEST(Policy, Examples) {
  auto b = sample_bundle();
  EXPECT_TRUE(evaluate_policy(b, Policy()).accepted);

  b.vendor = "EvilCorp";
  auto deny = Policy({}, {{IdentityKind::kVendor, "EvilCorp"}});
  auto d = evaluate_policy(b, deny);
  EXPECT_FALSE(d.accepted);
  EXPECT_TRUE(d.denied);

  auto allow = Policy({{IdentityKind::kTcb, std::string(64, '2')}}, {});
  EXPECT_FALSE(evaluate_policy(sample_bundle(), allow).accepted);
  auto allow_ok = Policy({{IdentityKind::kTcb, std::string(64, '1')}}, {});
  EXPECT_TRUE(evaluate_policy(sample_bundle(), allow_ok).accepted);
}

TEST(Policy, OverlapIsInvalid) {
  Selector s{IdentityKind::kVendor, "X"};
  EXPECT_THROW(Policy({s}, {s}), Error);
}

TEST(Policy, AbsentIdentityIsSkipped) {
  auto b = sample_bundle();
  b.domain.reset();
  auto p = Policy({{IdentityKind::kDomain, "example.test"}}, {});
  EXPECT_TRUE(evaluate_policy(b, p).accepted);
}

TEST(Policy, JsonRoundTrip) {
  auto j = nlohmann::json::parse(R"({"allowed":[{"kind":"vendor","value":"CN=V"}],
                                      "denied":[{"kind":"tcb","value":")" +
                                 std::string(64, 'A') + R"("}]})");
  auto p = Policy::from_json(j);
  EXPECT_EQ(p.denied().begin()->value, std::string(64, 'a'));
  EXPECT_EQ(Policy::from_json(p.to_json()).allowed(), p.allowed());
  EXPECT_THROW(Policy::from_json(nlohmann::json::parse(R"({"allowed":[{"kind":"color","value":"x"}]})")),
               Error);
}

TEST(PolicyProperty, DenyOverrides) {
  // Adding a matching deny always rejects; it never turns a reject into accept.
  auto b = sample_bundle();
  for (auto kind : kAllIdentityKinds) {
    auto value = *b.value_of(kind);
    for (bool with_allow : {false, true}) {
      std::set<Selector> allowed;
      if (with_allow) allowed.insert({kind, value});
      auto before = evaluate_policy(b, Policy(allowed, {}));
      std::set<Selector> denied{{kind, value}};
      allowed.erase({kind, value});
      auto after = evaluate_policy(b, Policy(allowed, denied));
      EXPECT_TRUE(before.accepted);
      EXPECT_FALSE(after.accepted);
    }
  }
}

}  // namespace
}  // namespace httpa
