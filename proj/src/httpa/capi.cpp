#include "httpa/httpa.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "httpa/client.hpp"
#include "httpa/log.hpp"
#include "httpa/prf.hpp"
#include "httpa/server.hpp"
#include "httpa/service.hpp"

struct httpa_server {
  std::unique_ptr<httpa::HttpaServer> impl;
};

struct httpa_verifier {
  std::unique_ptr<httpa::VerifierService> impl;
};

struct httpa_client {
  std::unique_ptr<httpa::HttpaClient> impl;
  nlohmann::json report = nlohmann::json::object();
};

namespace {

thread_local std::string last_error;

httpa_status status_for(httpa::FailureReason r) {
  using httpa::FailureReason;
  switch (r) {
    case FailureReason::kNotAttestable: return HTTPA_ERR_NOT_ATTESTABLE;
    case FailureReason::kQuoteRejected: return HTTPA_ERR_QUOTE_REJECTED;
    case FailureReason::kPolicyRejected: return HTTPA_ERR_POLICY_REJECTED;
    case FailureReason::kConfirmationMismatch: return HTTPA_ERR_CONFIRMATION_MISMATCH;
    default: return HTTPA_ERR_HANDSHAKE;
  }
}

httpa_status status_for(httpa::ErrorCode c) {
  using httpa::ErrorCode;
  switch (c) {
    case ErrorCode::kBadConfig:
    case ErrorCode::kInvalidPolicy:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidLength:
    case ErrorCode::kIo:
    case ErrorCode::kMalformedCertificate:
    case ErrorCode::kBadVendorCredentials:
      return HTTPA_ERR_CONFIG;
    case ErrorCode::kPolicyRejected: return HTTPA_ERR_POLICY_REJECTED;
    case ErrorCode::kTransport: return HTTPA_ERR_TRANSPORT;
    case ErrorCode::kBindFailure: return HTTPA_ERR_BIND;
    case ErrorCode::kAuthFailure:
    case ErrorCode::kReplayOrReorder:
    case ErrorCode::kChannelClosed:
    case ErrorCode::kOverflow:
    case ErrorCode::kMalformedRequest:
      return HTTPA_ERR_RECORD;
    default: return HTTPA_ERR_INTERNAL;
  }
}

// Runs fn, translating exceptions into a status and last_error.
template <class Fn>
httpa_status guarded(Fn&& fn, nlohmann::json* report = nullptr) {
  try {
    fn();
    return HTTPA_OK;
  } catch (const httpa::HandshakeError& e) {
    last_error = e.what();
    if (report) {
      *report = {{"verdict", "Fail"},
                 {"reason", httpa::failure_reason_name(e.failure().reason)},
                 {"detail", e.failure().detail}};
    }
    return status_for(e.failure().reason);
  } catch (const httpa::Error& e) {
    last_error = e.what();
    if (report) *report = {{"error", httpa::error_code_name(e.code())}, {"detail", e.detail()}};
    return status_for(e.code());
  } catch (const std::exception& e) {
    last_error = e.what();
    if (report) *report = {{"error", "Internal"}, {"detail", e.what()}};
    return HTTPA_ERR_INTERNAL;
  }
}

httpa_status bad_arg(const char* what) {
  last_error = what;
  return HTTPA_ERR_CONFIG;
}

void fill(httpa_buffer* out, const void* data, std::size_t len) {
  out->data = static_cast<std::uint8_t*>(std::malloc(len ? len : 1));
  if (!out->data) throw std::bad_alloc();
  if (len) std::memcpy(out->data, data, len);
  out->len = len;
}

void fill(httpa_buffer* out, const std::string& s) { fill(out, s.data(), s.size()); }

nlohmann::json parse_config(const char* text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw httpa::Error(httpa::ErrorCode::kBadConfig, std::string("config is not JSON: ") + e.what());
  }
}

}  // namespace

extern "C" {

const char* httpa_status_string(httpa_status status) {
  switch (status) {
    case HTTPA_OK: return "ok";
    case HTTPA_ERR_CONFIG: return "bad configuration";
    case HTTPA_ERR_NOT_ATTESTABLE: return "not attestable";
    case HTTPA_ERR_QUOTE_REJECTED: return "quote rejected";
    case HTTPA_ERR_POLICY_REJECTED: return "policy rejected";
    case HTTPA_ERR_CONFIRMATION_MISMATCH: return "confirmation mismatch";
    case HTTPA_ERR_TRANSPORT: return "transport error";
    case HTTPA_ERR_HANDSHAKE: return "handshake failed";
    case HTTPA_ERR_BIND: return "bind failure";
    case HTTPA_ERR_RECORD: return "record error";
    case HTTPA_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* httpa_last_error(void) { return last_error.c_str(); }

void httpa_buffer_free(httpa_buffer* buf) {
  if (!buf) return;
  std::free(buf->data);
  buf->data = nullptr;
  buf->len = 0;
}

httpa_status httpa_set_log_level(const char* level) {
  if (!level) return bad_arg("level is NULL");
  auto parsed = httpa::parse_log_level(level);
  if (!parsed) return bad_arg("unknown log level");
  httpa::set_log_level(*parsed);
  return HTTPA_OK;
}

httpa_status httpa_keygen(const char* out_dir, int has_seed, uint64_t seed, int tls) {
  if (!out_dir) return bad_arg("out_dir is NULL");
  return guarded([&] {
    httpa::KeygenOptions o;
    o.out_dir = out_dir;
    if (has_seed) o.seed = seed;
    o.tls = tls != 0;
    httpa::keygen(o);
  });
}

httpa_status httpa_prf(const uint8_t* secret, size_t secret_len, const char* label,
                       const uint8_t* seed, size_t seed_len, size_t out_len, httpa_buffer* out) {
  if (!out || !label || (!secret && secret_len) || (!seed && seed_len)) {
    return bad_arg("NULL argument");
  }
  return guarded([&] {
    auto bytes = httpa::prf(httpa::ByteView(secret, secret_len), label,
                            httpa::ByteView(seed, seed_len), out_len);
    fill(out, bytes.data(), bytes.size());
  });
}

httpa_status httpa_server_create(const char* config_json, httpa_server** out) {
  if (!config_json || !out) return bad_arg("NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto cfg = httpa::ServerConfig::from_json(parse_config(config_json));
    auto s = std::make_unique<httpa_server>();
    s->impl = std::make_unique<httpa::HttpaServer>(std::move(cfg));
    *out = s.release();
  });
}

httpa_status httpa_server_start(httpa_server* server) {
  if (!server) return bad_arg("server is NULL");
  return guarded([&] { server->impl->start(); });
}

uint16_t httpa_server_port(const httpa_server* server) {
  if (!server) return 0;
  try {
    return server->impl->port();
  } catch (const std::exception& e) {
    last_error = e.what();
    return 0;
  }
}

httpa_status httpa_server_stats(const httpa_server* server, httpa_buffer* out) {
  if (!server || !out) return bad_arg("NULL argument");
  return guarded([&] {
    auto s = server->impl->stats();
    nlohmann::json j = {{"preflights", s.preflights},
                        {"attest_requests", s.attest_requests},
                        {"established", s.established},
                        {"aborted", s.aborted},
                        {"records", s.records}};
    fill(out, j.dump());
  });
}

void httpa_server_stop(httpa_server* server) {
  if (server) server->impl->stop();
}

void httpa_server_destroy(httpa_server* server) { delete server; }

httpa_status httpa_verifier_create(const char* config_json, httpa_verifier** out) {
  if (!config_json || !out) return bad_arg("NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto cfg = httpa::VerifierServiceConfig::from_json(parse_config(config_json));
    auto v = std::make_unique<httpa_verifier>();
    v->impl = std::make_unique<httpa::VerifierService>(std::move(cfg));
    *out = v.release();
  });
}

httpa_status httpa_verifier_start(httpa_verifier* verifier) {
  if (!verifier) return bad_arg("verifier is NULL");
  return guarded([&] { verifier->impl->start(); });
}

uint16_t httpa_verifier_port(const httpa_verifier* verifier) {
  if (!verifier) return 0;
  try {
    return verifier->impl->port();
  } catch (const std::exception& e) {
    last_error = e.what();
    return 0;
  }
}

void httpa_verifier_stop(httpa_verifier* verifier) {
  if (verifier) verifier->impl->stop();
}

void httpa_verifier_destroy(httpa_verifier* verifier) { delete verifier; }

httpa_status httpa_client_create(const char* config_json, httpa_client** out) {
  if (!config_json || !out) return bad_arg("NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto cfg = httpa::ClientConfig::from_json(parse_config(config_json));
    auto c = std::make_unique<httpa_client>();
    c->impl = std::make_unique<httpa::HttpaClient>(std::move(cfg));
    *out = c.release();
  });
}

httpa_status httpa_client_request(httpa_client* client, const char* method, const uint8_t* body,
                                  size_t body_len, httpa_buffer* out) {
  if (!client || !out || (!body && body_len)) return bad_arg("NULL argument");
  out->data = nullptr;
  out->len = 0;
  return guarded(
      [&] {
        auto resp = client->impl->request(httpa::ByteView(body, body_len), method ? method : "POST");
        client->report = resp.report;
        fill(out, resp.body.data(), resp.body.size());
      },
      &client->report);
}

httpa_status httpa_client_report(const httpa_client* client, httpa_buffer* out) {
  if (!client || !out) return bad_arg("NULL argument");
  return guarded([&] { fill(out, client->report.dump()); });
}

size_t httpa_client_attest_count(const httpa_client* client) {
  return client ? client->impl->attest_messages_sent() : 0;
}

void httpa_client_destroy(httpa_client* client) { delete client; }

}  // extern "C"
