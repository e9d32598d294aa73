#include "httpa/quote.hpp"

#include "httpa/rng.hpp"

namespace httpa {

Bytes Quote::signed_prefix() const {
  Bytes out;
  put_u16(out, version);
  append(out, measurement);
  append(out, vendor_id);
  append(out, report_data);
  return out;
}

Bytes Quote::encode() const {
  Bytes out = signed_prefix();
  put_len16(out, signature);
  if (cert_chain.size() > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, "chain too long");
  put_u16(out, static_cast<std::uint16_t>(cert_chain.size()));
  for (const auto& c : cert_chain) put_len16(out, c.encode());
  return out;
}

Quote Quote::decode(ByteView bytes) {
  if (bytes.size() < kQuoteFixedPrefix) {
    throw Error(ErrorCode::kTruncatedQuote,
                std::to_string(bytes.size()) + " bytes < fixed prefix");
  }
  ByteReader r(bytes, ErrorCode::kTruncatedQuote);
  Quote q;
  q.version = r.u16();
  if (q.version != kQuoteVersion) {
    throw Error(ErrorCode::kBadVersion, std::to_string(q.version));
  }
  q.measurement = to_array<32>(r.take(32));
  q.vendor_id = to_array<16>(r.take(16));
  q.report_data = to_array<64>(r.take(64));
  auto sig = r.len16();
  q.signature.assign(sig.begin(), sig.end());
  auto count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) {
    auto blob = r.len16();
    try {
      q.cert_chain.push_back(Certificate::decode(blob));
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedQuote, e.what());
    }
  }
  if (!r.done()) throw Error(ErrorCode::kMalformedQuote, "trailing bytes");
  return q;
}

Bytes quote_encode(const Quote& quote) { return quote.encode(); }
Quote quote_decode(ByteView bytes) { return Quote::decode(bytes); }

ReportData report_data_for(ByteView bound_public_key) {
  ReportData rd{};
  auto fp = sha256(bound_public_key);
  std::copy(fp.begin(), fp.end(), rd.begin());
  return rd;
}

VendorId vendor_id_for(const Certificate& vendor_signing_cert) {
  auto h = sha256(vendor_signing_cert.public_key);
  VendorId id{};
  std::copy_n(h.begin(), id.size(), id.begin());
  return id;
}

bool verify_quote_signature(const Quote& quote) {
  if (quote.cert_chain.empty()) return false;
  return ed25519_verify(quote.cert_chain.front().public_key, quote.signed_prefix(),
                        quote.signature);
}

std::shared_ptr<SimulatedTee> SimulatedTee::create(ByteView code_identity,
                                                   Credentials vendor_credentials,
                                                   const TrustStore& vendor_roots, Rng& rng) {
  const auto& chain = vendor_credentials.chain;
  if (chain.size() != 2 || chain[0].is_ca || !chain[1].is_ca ||
      chain[0].public_key != vendor_credentials.key.public_key() ||
      !vendor_roots.validates(chain)) {
    throw Error(ErrorCode::kBadVendorCredentials,
                "TCB signing chain does not lead to a configured vendor root");
  }
  return std::shared_ptr<SimulatedTee>(new SimulatedTee(
      sha256(code_identity), std::move(vendor_credentials), KemKeyPair::generate(rng)));
}

SimulatedTee::SimulatedTee(Measurement m, Credentials creds, KemKeyPair kem)
    : measurement_(m), creds_(std::move(creds)), kem_(std::move(kem)) {}

Quote SimulatedTee::generate_quote() const { return generate_quote_binding(public_key()); }

Quote SimulatedTee::generate_quote_binding(ByteView public_value) const {
  Quote q;
  q.measurement = measurement_;
  q.vendor_id = vendor_id_for(creds_.chain[1]);
  q.report_data = report_data_for(public_value);
  auto sig = creds_.key.sign(q.signed_prefix());
  q.signature.assign(sig.begin(), sig.end());
  q.cert_chain = creds_.chain;
  return q;
}

std::optional<std::array<std::uint8_t, 32>> SimulatedTee::unwrap_secret(
    const WrappedSecret& wrapped, ByteView transcript_hash) const {
  std::lock_guard lock(mu_);
  return kem_unwrap(kem_, wrapped, transcript_hash);
}

void SimulatedTee::provide_randoms(ByteView client_random, ByteView server_random) {
  std::lock_guard lock(mu_);
  if (client_random.size() == 32 && server_random.size() == 32) ++randoms_received_;
}

std::uint64_t SimulatedTee::randoms_received() const {
  std::lock_guard lock(mu_);
  return randoms_received_;
}

Bytes SimulatedTee::execute(const std::function<Bytes(ByteView)>& fn, ByteView input) const {
  std::lock_guard lock(mu_);
  return fn(input);
}

}  // namespace httpa
