#include "httpa/service.hpp"

#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>
#include <sys/stat.h>

#include <cstdio>
#include <filesystem>

#include "httpa/log.hpp"
#include "httpa/pki.hpp"
#include "httpa/quote.hpp"
#include "httpa/rng.hpp"

namespace httpa {

namespace {

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

HttpMessage plain(int status, std::string_view text) {
  auto r = HttpMessage::response(status);
  r.set_header("Content-Type", "text/plain");
  r.body = to_bytes(text);
  return r;
}

}  // namespace

VerifierServiceConfig VerifierServiceConfig::from_json(const nlohmann::json& j) {
  try {
    VerifierServiceConfig c;
    if (auto v = opt<std::string>(j, "host")) c.host = *v;
    if (auto v = opt<std::uint16_t>(j, "port")) c.port = *v;
    auto cert = opt<std::string>(j, "tls_cert");
    auto key = opt<std::string>(j, "tls_key");
    if (cert || key) {
      if (!cert || !key) throw Error(ErrorCode::kBadConfig, "tls needs both tls_cert and tls_key");
      c.tls = TlsServerOptions{*cert, *key};
    }
    if (auto v = opt<std::string>(j, "roots")) c.roots_path = *v;
    if (auto v = opt<std::string>(j, "credentials")) c.credentials_path = *v;
    c.tee_credentials_path = opt<std::string>(j, "tee_credentials");
    c.seed = opt<std::uint64_t>(j, "seed");
    if (auto v = opt<std::int64_t>(j, "now")) c.now = *v;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("verifier config: ") + e.what());
  }
}

VerifierService::VerifierService(VerifierServiceConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.roots_path.empty()) throw Error(ErrorCode::kBadConfig, "roots path is required");
  if (cfg_.credentials_path.empty()) throw Error(ErrorCode::kBadConfig, "credentials path is required");
  std::shared_ptr<const Clock> clock;
  if (cfg_.seed) {
    clock = std::make_shared<ManualClock>(cfg_.now);
  } else {
    clock = std::make_shared<SystemClock>();
  }
  auto roots = load_trust_store(cfg_.roots_path);
  std::shared_ptr<const SimulatedTee> tee;
  if (cfg_.tee_credentials_path) {
    std::unique_ptr<Rng> rng;
    if (cfg_.seed) rng = std::make_unique<SeededRng>(*cfg_.seed, "verifier-tee");
    else rng = std::make_unique<SystemRng>();
    tee = SimulatedTee::create(as_bytes("httpa-demo-verifier"),
                               load_credentials(*cfg_.tee_credentials_path), roots, *rng);
  }
  verifier_ = std::make_shared<Verifier>(load_credentials(cfg_.credentials_path), roots, clock, tee);
}

VerifierService::~VerifierService() { stop(); }

HttpMessage VerifierService::handle(const HttpMessage& req) const {
  auto path = req.target.substr(0, req.target.find('?'));
  if (path != "/verify") return plain(404, "not found");
  if (req.method != "POST") {
    auto r = plain(405, "method not allowed");
    r.set_header("Allow", "POST");
    return r;
  }
  try {
    auto report = attestation_service_handle(*verifier_, req.body);
    auto r = HttpMessage::response(200);
    r.set_header("Content-Type", "application/octet-stream");
    r.body = std::move(report);
    return r;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMalformedRequest) throw;
    log_event(LogLevel::kInfo, "verify_rejected", {{"error", e.what()}});
    return plain(400, e.what());
  }
}

void VerifierService::start() {
  if (listener_) return;
  listener_ = std::make_unique<HttpListener>(cfg_.host, cfg_.port, cfg_.tls, [this] {
    return [this](const HttpMessage& req) { return handle(req); };
  });
  listener_->start();
  log_event(LogLevel::kInfo, "listening",
            {{"host", cfg_.host}, {"port", listener_->port()}, {"service", "verifier"},
             {"tls", cfg_.tls.has_value()}});
}

std::uint16_t VerifierService::port() const {
  if (!listener_) throw Error(ErrorCode::kWrongState, "verifier not started");
  return listener_->port();
}

void VerifierService::stop() {
  if (!listener_) return;
  listener_->stop();
  listener_.reset();
}

namespace {

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using PKeyPtr = std::unique_ptr<EVP_PKEY, Deleter<EVP_PKEY, EVP_PKEY_free>>;
using X509Ptr = std::unique_ptr<X509, Deleter<X509, X509_free>>;
using FilePtr = std::unique_ptr<FILE, int (*)(FILE*)>;

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kCrypto, what);
}

FilePtr open_for_write(const std::string& path, bool secret) {
  FilePtr f(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path);
  if (secret) ::chmod(path.c_str(), 0600);
  return f;
}

void write_tls_material(const std::string& dir) {
  PKeyPtr key(EVP_EC_gen("P-256"));
  check(key != nullptr, "EC key generation");
  X509Ptr cert(X509_new());
  check(cert != nullptr, "X509_new");
  X509_set_version(cert.get(), 2);
  ASN1_INTEGER_set(X509_get_serialNumber(cert.get()), 1);
  X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
  X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * 365);
  X509_set_pubkey(cert.get(), key.get());
  auto* name = X509_get_subject_name(cert.get());
  X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                             reinterpret_cast<const unsigned char*>("localhost"), -1, -1, 0);
  X509_set_issuer_name(cert.get(), name);

  X509V3_CTX ctx;
  X509V3_set_ctx_nodb(&ctx);
  X509V3_set_ctx(&ctx, cert.get(), cert.get(), nullptr, nullptr, 0);
  for (auto [nid, value] : {std::pair{NID_subject_alt_name, "DNS:localhost,IP:127.0.0.1"},
                            std::pair{NID_basic_constraints, "critical,CA:TRUE"}}) {
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value);
    check(ext != nullptr, "X509 extension");
    X509_add_ext(cert.get(), ext, -1);
    X509_EXTENSION_free(ext);
  }
  check(X509_sign(cert.get(), key.get(), EVP_sha256()) > 0, "X509_sign");

  auto cf = open_for_write(dir + "/tls_cert.pem", false);
  check(PEM_write_X509(cf.get(), cert.get()) == 1, "PEM_write_X509");
  auto kf = open_for_write(dir + "/tls_key.pem", true);
  check(PEM_write_PrivateKey(kf.get(), key.get(), nullptr, nullptr, 0, nullptr, nullptr) == 1,
        "PEM_write_PrivateKey");
}

}  // namespace

void keygen(const KeygenOptions& opts) {
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + opts.out_dir + ": " + ec.message());
  std::unique_ptr<Rng> rng;
  if (opts.seed) rng = std::make_unique<SeededRng>(*opts.seed, "keygen");
  else rng = std::make_unique<SystemRng>();
  auto pki = make_demo_pki(*rng);
  save_trust_store(opts.out_dir + "/roots.json", pki.all_roots());
  save_credentials(opts.out_dir + "/tcb_credentials.json", pki.tcb);
  save_credentials(opts.out_dir + "/verifier_credentials.json", pki.verifier);
  ::chmod((opts.out_dir + "/tcb_credentials.json").c_str(), 0600);
  ::chmod((opts.out_dir + "/verifier_credentials.json").c_str(), 0600);
  if (opts.tls) write_tls_material(opts.out_dir);
}

}  // namespace httpa
