#include "httpa/cert.hpp"

#include <fstream>
#include "json.hpp"

namespace httpa {

namespace {

constexpr std::uint8_t kCertVersion = 1;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << j.dump(2) << "\n";
}

Bytes b64_field(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::kBadConfig, path + ": expected string");
  auto b = b64url_decode(j.get<std::string>());
  if (!b) throw Error(ErrorCode::kBadConfig, path + ": bad base64url");
  return *b;
}

}  // namespace

Bytes Certificate::to_be_signed() const {
  Bytes out;
  out.push_back(kCertVersion);
  put_len16(out, as_bytes(subject));
  put_len16(out, as_bytes(issuer));
  append(out, public_key);
  out.push_back(is_ca ? 1 : 0);
  return out;
}

Bytes Certificate::encode() const {
  Bytes out = to_be_signed();
  append(out, signature);
  return out;
}

Certificate Certificate::decode(ByteView der) {
  ByteReader r(der, ErrorCode::kMalformedCertificate);
  if (r.u8() != kCertVersion) {
    throw Error(ErrorCode::kMalformedCertificate, "unknown certificate version");
  }
  Certificate c;
  c.subject = to_string(r.len16());
  c.issuer = to_string(r.len16());
  c.public_key = to_array<32>(r.take(32));
  auto ca = r.u8();
  if (ca > 1) throw Error(ErrorCode::kMalformedCertificate, "is_ca flag");
  c.is_ca = ca == 1;
  c.signature = to_array<64>(r.take(64));
  if (!r.done()) throw Error(ErrorCode::kMalformedCertificate, "trailing bytes");
  if (c.subject.empty() || c.issuer.empty()) {
    throw Error(ErrorCode::kMalformedCertificate, "empty name");
  }
  return c;
}

bool Certificate::self_signed() const {
  return subject == issuer &&
         ed25519_verify(public_key, to_be_signed(), signature);
}

Certificate issue_certificate(std::string subject, const PublicKey32& subject_key,
                              bool is_ca, const std::string& issuer_name,
                              const SigningKey& issuer_key) {
  Certificate c;
  c.subject = std::move(subject);
  c.issuer = issuer_name;
  c.public_key = subject_key;
  c.is_ca = is_ca;
  c.signature = issuer_key.sign(c.to_be_signed());
  return c;
}

TrustStore::TrustStore(std::vector<Certificate> roots) {
  for (auto& r : roots) add(std::move(r));
}

void TrustStore::add(Certificate root) {
  if (!root.self_signed() || !root.is_ca) {
    throw Error(ErrorCode::kBadConfig, "trust anchor '" + root.subject +
                                           "' is not a self-signed CA");
  }
  roots_.push_back(std::move(root));
}

bool TrustStore::validates(const std::vector<Certificate>& chain) const {
  if (chain.empty()) return false;
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const auto& child = chain[i];
    const auto& parent = chain[i + 1];
    if (!parent.is_ca || child.issuer != parent.subject) return false;
    if (!ed25519_verify(parent.public_key, child.to_be_signed(), child.signature)) {
      return false;
    }
  }
  const auto& top = chain.back();
  for (const auto& root : roots_) {
    if (root.subject == top.issuer &&
        ed25519_verify(root.public_key, top.to_be_signed(), top.signature)) {
      return true;
    }
  }
  return false;
}

Credentials load_credentials(const std::string& path) {
  auto j = read_json(path);
  if (!j.contains("signing_key") || !j.contains("chain") || !j["chain"].is_array() ||
      j["chain"].empty()) {
    throw Error(ErrorCode::kBadConfig, path + ": need signing_key and chain");
  }
  auto seed = b64_field(j["signing_key"], path);
  Credentials creds{SigningKey::from_seed(seed), {}};
  secure_wipe(seed);
  for (const auto& c : j["chain"]) {
    creds.chain.push_back(Certificate::decode(b64_field(c, path)));
  }
  if (creds.leaf().public_key != creds.key.public_key()) {
    throw Error(ErrorCode::kBadConfig, path + ": key does not match leaf certificate");
  }
  return creds;
}

void save_credentials(const std::string& path, const Credentials& creds) {
  nlohmann::json j;
  j["signing_key"] = b64url_encode(creds.key.seed());
  j["chain"] = nlohmann::json::array();
  for (const auto& c : creds.chain) j["chain"].push_back(b64url_encode(c.encode()));
  j["subject"] = creds.leaf().subject;
  write_json(path, j);
}

TrustStore load_trust_store(const std::string& path) {
  auto j = read_json(path);
  if (!j.contains("roots") || !j["roots"].is_array()) {
    throw Error(ErrorCode::kBadConfig, path + ": need roots array");
  }
  TrustStore store;
  for (const auto& c : j["roots"]) store.add(Certificate::decode(b64_field(c, path)));
  return store;
}

void save_trust_store(const std::string& path, const TrustStore& store) {
  nlohmann::json j;
  j["roots"] = nlohmann::json::array();
  for (const auto& c : store.roots()) j["roots"].push_back(b64url_encode(c.encode()));
  write_json(path, j);
}

}  // namespace httpa
