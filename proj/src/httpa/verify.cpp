#include "httpa/verify.hpp"

#include <algorithm>
#include <fstream>

#include "httpa/rng.hpp"

namespace httpa {

namespace {

[[noreturn]] void bad_policy(const std::string& why) {
  throw Error(ErrorCode::kInvalidPolicy, why);
}

std::string normalize_value(IdentityKind kind, std::string value) {
  if (kind == IdentityKind::kTcb) {
    auto raw = hex_decode(value);
    if (!raw || raw->size() != 32) bad_policy("tcb selector must be 64 hex digits");
    return hex_encode(*raw);
  }
  if (value.empty()) bad_policy("empty selector value");
  return value;
}

std::set<Selector> selectors_from_json(const nlohmann::json& j, const char* field) {
  std::set<Selector> out;
  if (!j.contains(field)) return out;
  if (!j[field].is_array()) bad_policy(std::string(field) + " must be an array");
  for (const auto& item : j[field]) {
    if (!item.is_object() || !item.contains("kind") || !item.contains("value") ||
        !item["kind"].is_string() || !item["value"].is_string()) {
      bad_policy(std::string(field) + " entries need string kind and value");
    }
    auto kind = identity_kind_from_name(item["kind"].get<std::string>());
    if (!kind) bad_policy("unknown identity kind " + item["kind"].get<std::string>());
    out.insert({*kind, normalize_value(*kind, item["value"].get<std::string>())});
  }
  return out;
}

nlohmann::json selectors_to_json(const std::set<Selector>& s) {
  auto arr = nlohmann::json::array();
  for (const auto& sel : s) {
    arr.push_back({{"kind", identity_kind_name(sel.kind)}, {"value", sel.value}});
  }
  return arr;
}

void put_opt_string(Bytes& out, const std::optional<std::string>& s) {
  put_len16(out, s ? as_bytes(*s) : ByteView{});
}

std::optional<std::string> get_opt_string(ByteReader& r) {
  auto v = r.len16();
  if (v.empty()) return std::nullopt;
  return to_string(v);
}

Bytes encode_verdict(const Verdict& v) {
  Bytes out;
  out.push_back(static_cast<std::uint8_t>(v.reason));
  append(out, v.detail);
  return out;
}

Bytes encode_bundle(const IdentityBundle& b) {
  Bytes out;
  put_opt_string(out, b.domain);
  put_len16(out, b.tcb);
  put_opt_string(out, b.vendor);
  put_opt_string(out, b.verifier);
  return out;
}

Bytes encode_timestamp(Timestamp t) {
  Bytes out;
  put_u64(out, static_cast<std::uint64_t>(to_unix(t)));
  return out;
}

// Walks the quote layout to find where it ends inside a larger buffer.
std::size_t quote_extent(ByteView bytes) {
  ByteReader r(bytes, ErrorCode::kMalformedRequest);
  r.take(kQuoteFixedPrefix - 2);
  r.len16();
  auto count = r.u16();
  for (std::uint16_t i = 0; i < count; ++i) r.len16();
  return r.position();
}

}  // namespace

std::string_view identity_kind_name(IdentityKind kind) {
  switch (kind) {
    case IdentityKind::kDomain: return "domain";
    case IdentityKind::kTcb: return "tcb";
    case IdentityKind::kVendor: return "vendor";
    case IdentityKind::kVerifier: return "verifier";
  }
  return "?";
}

std::optional<IdentityKind> identity_kind_from_name(std::string_view name) {
  for (auto k : kAllIdentityKinds) {
    if (identity_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<std::string> IdentityBundle::value_of(IdentityKind kind) const {
  switch (kind) {
    case IdentityKind::kDomain: return domain;
    case IdentityKind::kTcb: return hex_encode(tcb);
    case IdentityKind::kVendor: return vendor;
    case IdentityKind::kVerifier: return verifier;
  }
  return std::nullopt;
}

nlohmann::json IdentityBundle::to_json() const {
  nlohmann::json j;
  j["domain"] = domain ? nlohmann::json(*domain) : nlohmann::json("unverified");
  j["tcb"] = hex_encode(tcb);
  j["vendor"] = vendor ? nlohmann::json(*vendor) : nlohmann::json(nullptr);
  j["verifier"] = verifier ? nlohmann::json(*verifier) : nlohmann::json(nullptr);
  return j;
}

IdentityBundle IdentityBundle::from_json(const nlohmann::json& j) {
  IdentityBundle b;
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || !j[key].is_string()) return std::nullopt;
    return j[key].get<std::string>();
  };
  b.domain = opt("domain");
  if (b.domain == "unverified") b.domain.reset();
  auto tcb = hex_decode_or_throw(j.at("tcb").get<std::string>());
  b.tcb = to_array<32>(tcb);
  b.vendor = opt("vendor");
  b.verifier = opt("verifier");
  return b;
}

Policy::Policy(std::set<Selector> allowed, std::set<Selector> denied)
    : allowed_(std::move(allowed)), denied_(std::move(denied)) {
  for (const auto& s : allowed_) {
    if (denied_.count(s)) {
      bad_policy("selector " + std::string(identity_kind_name(s.kind)) + "=" + s.value +
                 " is both allowed and denied");
    }
  }
}

Policy Policy::from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad_policy("policy must be a JSON object");
  return Policy(selectors_from_json(j, "allowed"), selectors_from_json(j, "denied"));
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    bad_policy(path + ": " + e.what());
  }
}

nlohmann::json Policy::to_json() const {
  return {{"allowed", selectors_to_json(allowed_)}, {"denied", selectors_to_json(denied_)}};
}

std::string PolicyDecision::describe() const {
  if (accepted) return "accept";
  std::string s = denied ? "denied " : "not allowed ";
  if (selector) s += std::string(identity_kind_name(selector->kind)) + "=" + selector->value;
  return s;
}

PolicyDecision evaluate_policy(const IdentityBundle& bundle, const Policy& policy) {
  for (auto kind : kAllIdentityKinds) {
    auto value = bundle.value_of(kind);
    if (!value) continue;
    Selector sel{kind, *value};
    if (policy.denied().count(sel)) return {false, sel, true};
  }
  if (policy.allowed().empty()) return {};
  for (auto kind : kAllIdentityKinds) {
    auto value = bundle.value_of(kind);
    if (!value) continue;
    bool kind_listed = std::any_of(policy.allowed().begin(), policy.allowed().end(),
                                   [&](const Selector& s) { return s.kind == kind; });
    if (kind_listed && !policy.allowed().count({kind, *value})) {
      return {false, Selector{kind, *value}, false};
    }
  }
  return {};
}

std::string_view fail_reason_name(FailReason reason) {
  switch (reason) {
    case FailReason::kNone: return "Pass";
    case FailReason::kMalformed: return "Malformed";
    case FailReason::kBadVersion: return "BadVersion";
    case FailReason::kBadChain: return "BadChain";
    case FailReason::kVendorMismatch: return "VendorMismatch";
    case FailReason::kFingerprintMismatch: return "FingerprintMismatch";
    case FailReason::kUntrustedVerifier: return "UntrustedVerifier";
  }
  return "?";
}

QuoteCheck check_quote(const Quote& quote, const TrustStore& roots, ByteView expected_pubkey) {
  QuoteCheck out;
  out.bundle.tcb = quote.measurement;
  if (quote.cert_chain.size() >= 2) out.bundle.vendor = quote.cert_chain[1].subject;

  if (quote.version != kQuoteVersion) {
    out.verdict = Verdict::fail(FailReason::kBadVersion, std::to_string(quote.version));
    return out;
  }
  if (quote.cert_chain.size() != 2 || quote.cert_chain[0].is_ca ||
      !roots.validates(quote.cert_chain)) {
    out.verdict = Verdict::fail(FailReason::kBadChain, "certificate chain");
    return out;
  }
  if (!verify_quote_signature(quote)) {
    out.verdict = Verdict::fail(FailReason::kBadChain, "quote signature");
    return out;
  }
  if (quote.vendor_id != vendor_id_for(quote.cert_chain[1])) {
    out.verdict = Verdict::fail(FailReason::kVendorMismatch);
    return out;
  }
  if (!std::all_of(quote.report_data.begin() + 32, quote.report_data.end(),
                   [](std::uint8_t b) { return b == 0; })) {
    out.verdict = Verdict::fail(FailReason::kMalformed, "report_data tail not zero");
    return out;
  }
  if (report_data_for(expected_pubkey) != quote.report_data) {
    out.verdict = Verdict::fail(FailReason::kFingerprintMismatch);
    return out;
  }
  return out;
}

QuoteCheck check_quote_bytes(ByteView quote, const TrustStore& roots, ByteView expected_pubkey) {
  try {
    return check_quote(Quote::decode(quote), roots, expected_pubkey);
  } catch (const Error& e) {
    QuoteCheck out;
    out.verdict = Verdict::fail(
        e.code() == ErrorCode::kBadVersion ? FailReason::kBadVersion : FailReason::kMalformed,
        e.what());
    return out;
  }
}

Bytes VerificationReport::signed_payload() const {
  Bytes out;
  put_len16(out, encode_verdict(verdict));
  put_len16(out, encode_bundle(bundle));
  put_len16(out, encode_timestamp(timestamp));
  return out;
}

Bytes VerificationReport::encode() const {
  Bytes out;
  put_len16(out, encode_verdict(verdict));
  put_len16(out, encode_bundle(bundle));
  put_len16(out, verifier_quote ? verifier_quote->encode() : Bytes{});
  put_len16(out, encode_timestamp(timestamp));
  put_len16(out, signature);
  put_u16(out, static_cast<std::uint16_t>(verifier_chain.size()));
  for (const auto& c : verifier_chain) put_len16(out, c.encode());
  return out;
}

VerificationReport VerificationReport::decode(ByteView bytes) {
  try {
    ByteReader r(bytes, ErrorCode::kMalformedRequest);
    VerificationReport rep;

    ByteReader verdict(r.len16(), ErrorCode::kMalformedRequest);
    auto code = verdict.u8();
    if (code > static_cast<std::uint8_t>(FailReason::kUntrustedVerifier)) {
      throw Error(ErrorCode::kMalformedRequest, "verdict code");
    }
    rep.verdict.reason = static_cast<FailReason>(code);
    rep.verdict.detail = to_string(verdict.take(verdict.remaining()));

    ByteReader bundle(r.len16(), ErrorCode::kMalformedRequest);
    rep.bundle.domain = get_opt_string(bundle);
    auto tcb = bundle.len16();
    if (tcb.size() != 32) throw Error(ErrorCode::kMalformedRequest, "tcb length");
    rep.bundle.tcb = to_array<32>(tcb);
    rep.bundle.vendor = get_opt_string(bundle);
    rep.bundle.verifier = get_opt_string(bundle);
    if (!bundle.done()) throw Error(ErrorCode::kMalformedRequest, "bundle trailing bytes");

    auto vq = r.len16();
    if (!vq.empty()) rep.verifier_quote = Quote::decode(vq);

    ByteReader ts(r.len16(), ErrorCode::kMalformedRequest);
    rep.timestamp = from_unix(static_cast<std::int64_t>(ts.u64()));
    if (!ts.done()) throw Error(ErrorCode::kMalformedRequest, "timestamp length");

    auto sig = r.len16();
    rep.signature.assign(sig.begin(), sig.end());
    auto count = r.u16();
    for (std::uint16_t i = 0; i < count; ++i) {
      rep.verifier_chain.push_back(Certificate::decode(r.len16()));
    }
    if (!r.done()) throw Error(ErrorCode::kMalformedRequest, "trailing bytes");
    return rep;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedRequest) throw;
    throw Error(ErrorCode::kMalformedRequest, e.what());
  }
}

bool VerificationReport::signature_valid() const {
  if (verifier_chain.empty()) return false;
  if (!bundle.verifier || *bundle.verifier != verifier_chain.front().subject) return false;
  return ed25519_verify(verifier_chain.front().public_key, signed_payload(), signature);
}

bool VerificationReport::authentic(const TrustStore& verifier_roots) const {
  return signature_valid() && verifier_roots.validates(verifier_chain);
}

Verifier::Verifier(Credentials identity, TrustStore quote_roots,
                   std::shared_ptr<const Clock> clock, std::shared_ptr<const SimulatedTee> tee)
    : identity_(std::move(identity)),
      roots_(std::move(quote_roots)),
      clock_(std::move(clock)),
      tee_(std::move(tee)) {
  if (roots_.empty()) throw Error(ErrorCode::kBadConfig, "verifier needs trust anchors");
  if (!clock_) throw Error(ErrorCode::kBadConfig, "verifier needs a clock");
}

std::shared_ptr<Verifier> Verifier::in_process(const std::string& name, TrustStore quote_roots,
                                               std::shared_ptr<const Clock> clock, Rng& rng) {
  auto key = SigningKey::generate(rng);
  auto cert = issue_certificate(name, key.public_key(), true, name, key);
  return std::make_shared<Verifier>(Credentials{key, {cert}}, std::move(quote_roots),
                                    std::move(clock));
}

VerificationReport Verifier::sign(QuoteCheck check) const {
  VerificationReport rep;
  rep.verdict = std::move(check.verdict);
  rep.bundle = std::move(check.bundle);
  rep.bundle.verifier = name();
  if (tee_) rep.verifier_quote = tee_->generate_quote_binding(identity_.key.public_key());
  rep.timestamp = clock_->now();
  auto sig = identity_.key.sign(rep.signed_payload());
  rep.signature.assign(sig.begin(), sig.end());
  rep.verifier_chain = identity_.chain;
  return rep;
}

VerificationReport Verifier::verify_quote(const Quote& quote, ByteView expected_pubkey) const {
  return sign(check_quote(quote, roots_, expected_pubkey));
}

VerificationReport Verifier::verify_quote_bytes(ByteView quote, ByteView expected_pubkey) const {
  return sign(check_quote_bytes(quote, roots_, expected_pubkey));
}

Bytes encode_verify_request(ByteView quote, ByteView pubkey) {
  Bytes out(quote.begin(), quote.end());
  put_len16(out, pubkey);
  return out;
}

Bytes attestation_service_handle(const Verifier& verifier, ByteView request) {
  auto quote_len = quote_extent(request);
  ByteReader r(request.subspan(quote_len), ErrorCode::kMalformedRequest);
  auto pubkey = r.len16();
  if (!r.done() || pubkey.empty()) {
    throw Error(ErrorCode::kMalformedRequest, "pubkey field");
  }
  return verifier.verify_quote_bytes(request.first(quote_len), pubkey).encode();
}

}  // namespace httpa
