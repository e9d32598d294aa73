#include "httpa/client.hpp"

#include <sys/stat.h>

#include <cstdio>
#include <fstream>

#include "httpa/log.hpp"
#include "httpa/rng.hpp"
#include "httpa/server.hpp"

namespace httpa {

namespace {

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void write_file(const std::string& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

RemoteQuoteVerifier::RemoteQuoteVerifier(Url url, std::optional<TlsClientOptions> tls)
    : url_(std::move(url)), tls_(std::move(tls)) {}

VerificationReport RemoteQuoteVerifier::verify(ByteView quote, ByteView expected_pubkey) {
  auto conn = HttpConnection::connect(url_.host, url_.port, tls_);
  auto req = HttpMessage::request("POST", url_.path == "/" ? "/verify" : url_.path);
  req.set_header("Content-Type", "application/octet-stream");
  req.body = encode_verify_request(quote, expected_pubkey);
  auto resp = conn->round_trip(req);
  if (resp.status != 200) {
    throw Error(ErrorCode::kTransport, "verifier answered " + std::to_string(resp.status));
  }
  return VerificationReport::decode(resp.body);
}

ClientConfig ClientConfig::from_json(const nlohmann::json& j) {
  try {
    ClientConfig c;
    if (auto v = opt<std::string>(j, "url")) c.url = *v;
    if (auto v = opt<std::string>(j, "mode")) {
      if (*v == "one-way") c.mode = HandshakeMode::kOneWay;
      else if (*v == "mutual") c.mode = HandshakeMode::kMutual;
      else throw Error(ErrorCode::kBadConfig, "mode must be one-way or mutual");
    }
    c.policy_path = opt<std::string>(j, "policy");
    if (auto v = opt<std::string>(j, "roots")) c.roots_path = *v;
    if (auto v = opt<std::vector<std::string>>(j, "suites")) c.suites = parse_suite_list(*v);
    c.verifier_url = opt<std::string>(j, "verifier_url");
    c.session_cache_path = opt<std::string>(j, "session_cache");
    c.credentials_path = opt<std::string>(j, "credentials");
    c.tls_ca_path = opt<std::string>(j, "tls_ca");
    c.service = opt<std::string>(j, "service");
    c.seed = opt<std::uint64_t>(j, "seed");
    if (auto v = opt<std::int64_t>(j, "now")) c.now = *v;
    if (auto v = opt<bool>(j, "test_mode")) c.test_mode = *v;
    c.transcript_path = opt<std::string>(j, "transcript");
    if (auto v = opt<bool>(j, "quote_cache_respect")) c.quote_cache_respect = *v;
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("client config: ") + e.what());
  }
}

void ClientConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kBadConfig, what); };
  auto u = Url::parse(url);
  if (roots_path.empty()) bad("roots path is required");
  if (suites.empty()) bad("cipher suite list is empty");
  if (mode == HandshakeMode::kMutual && !credentials_path) {
    bad("mutual mode requires client TEE credentials");
  }
  if (seed && u.scheme == "https" && !test_mode) bad("--seed is refused with TLS outside test mode");
  if (verifier_url) Url::parse(*verifier_url);
}

HttpaClient::HttpaClient(ClientConfig cfg, std::shared_ptr<const Clock> clock)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  url_ = Url::parse(cfg_.url);
  if (url_.scheme == "https") tls_ = TlsClientOptions{cfg_.tls_ca_path};
  if (clock) {
    clock_ = std::move(clock);
  } else if (cfg_.seed) {
    clock_ = std::make_shared<ManualClock>(cfg_.now);
  } else {
    clock_ = std::make_shared<SystemClock>();
  }
  std::shared_ptr<Rng> aux_rng;
  if (cfg_.seed) {
    rng_ = std::make_shared<SeededRng>(*cfg_.seed, "client");
    aux_rng = std::make_shared<SeededRng>(*cfg_.seed, "client-tee");
  } else {
    rng_ = std::make_shared<SystemRng>();
    aux_rng = rng_;
  }
  auto roots = load_trust_store(cfg_.roots_path);
  if (cfg_.verifier_url) {
    auto vurl = Url::parse(*cfg_.verifier_url);
    std::optional<TlsClientOptions> vtls;
    if (vurl.scheme == "https") vtls = TlsClientOptions{cfg_.tls_ca_path};
    verifier_ = std::make_shared<RemoteQuoteVerifier>(vurl, vtls);
    verifier_roots_ = roots;
  } else {
    verifier_ = std::make_shared<LocalQuoteVerifier>(
        Verifier::in_process("CN=HTTPA Client Local Verifier", roots, clock_, *aux_rng));
  }
  if (cfg_.mode == HandshakeMode::kMutual) {
    tee_ = SimulatedTee::create(as_bytes("httpa-demo-client"),
                                load_credentials(*cfg_.credentials_path), roots, *aux_rng);
  }
  if (cfg_.policy_path) policy_ = Policy::load(*cfg_.policy_path);
  load_cache();
}

HandshakeConfig HttpaClient::handshake_config(const std::optional<std::string>& peer_domain) const {
  HandshakeConfig hc;
  hc.mode = cfg_.mode;
  hc.suites = cfg_.suites;
  hc.policy = policy_;
  hc.quote_cache_respect = cfg_.quote_cache_respect;
  hc.clock = clock_;
  hc.rng = rng_;
  hc.verifier = verifier_;
  hc.verifier_roots = verifier_roots_;
  hc.tee = tee_;
  hc.peer_domain = peer_domain;
  return hc;
}

std::string HttpaClient::cache_key() const {
  return url_.origin() + url_.path + "|" + cfg_.service.value_or("") + "|" +
         std::string(mode_name(cfg_.mode));
}

void HttpaClient::load_cache() {
  if (!cfg_.session_cache_path) return;
  std::ifstream in(*cfg_.session_cache_path);
  if (!in) return;
  try {
    auto j = nlohmann::json::parse(in);
    for (const auto& [key, value] : j.items()) tickets_[key] = SessionTicket::from_json(value);
  } catch (const std::exception& e) {
    // A corrupt cache only costs a full handshake.
    log_event(LogLevel::kWarn, "session_cache_ignored", {{"error", e.what()}});
    tickets_.clear();
  }
}

void HttpaClient::save_cache() const {
  if (!cfg_.session_cache_path) return;
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, t] : tickets_) j[key] = t.to_json();
  auto tmp = *cfg_.session_cache_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    ::chmod(tmp.c_str(), 0600);
    out << j.dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), cfg_.session_cache_path->c_str()) != 0) {
    throw Error(ErrorCode::kIo, "cannot replace " + *cfg_.session_cache_path);
  }
}

void HttpaClient::forget_sessions() {
  tickets_.clear();
  save_cache();
}

std::size_t HttpaClient::attest_messages_sent() const {
  std::size_t n = 0;
  for (const auto& w : wire_) {
    if (w.rfind("ATTEST ", 0) == 0) ++n;
  }
  return n;
}

HttpConnection& HttpaClient::connection() {
  if (!conn_ || !conn_->open()) conn_ = HttpConnection::connect(url_.host, url_.port, tls_);
  return *conn_;
}

HttpMessage HttpaClient::send(HttpConnection& conn, HttpMessage msg,
                              std::optional<MessageKind> kind) {
  msg.target = url_.path;
  if (cfg_.service) msg.set_header("X-Service", *cfg_.service);
  if (kind && tamper_) tamper_(*kind, msg);
  wire_.push_back(msg.method + " " + msg.target);
  log_event(LogLevel::kDebug, "send",
            {{"method", msg.method},
             {"kind", kind ? nlohmann::json(message_kind_name(*kind)) : nlohmann::json("record")}});
  try {
    return conn.round_trip(msg);
  } catch (const Error&) {
    conn_.reset();
    throw;
  }
}

std::pair<TrustedChannel, SessionTicket> HttpaClient::full_handshake() {
  auto& conn = connection();
  ClientHandshake hs(handshake_config(conn.peer_common_name()));
  auto fail = [&](Failure f) -> HandshakeError {
    log_event(LogLevel::kWarn, "handshake",
              {{"phase", "Failed"}, {"reason", failure_reason_name(f.reason)}, {"detail", f.detail}});
    conn_.reset();
    return HandshakeError(std::move(f));
  };

  auto resp = send(conn, hs.begin(), MessageKind::kPreflightRequest);
  auto step = hs.on_preflight_response(resp);
  if (auto* f = std::get_if<Failure>(&step)) throw fail(*f);

  resp = send(conn, std::get<HttpMessage>(std::move(step)), MessageKind::kAttestRequest);
  step = hs.on_attest_response(resp);
  if (auto* f = std::get_if<Failure>(&step)) throw fail(*f);

  resp = send(conn, std::get<HttpMessage>(std::move(step)), MessageKind::kTrustedSessionRequest);
  auto done = hs.on_session_response(resp);
  if (auto* f = std::get_if<Failure>(&done)) throw fail(*f);

  transcript_ = hs.transcript();
  if (cfg_.transcript_path) write_file(*cfg_.transcript_path, hs.transcript().serialize());
  auto channel = std::get<TrustedChannel>(std::move(done));
  SessionTicket ticket;
  if (hs.ticket()) {
    ticket = *hs.ticket();
  } else {
    ticket.session_id = channel.session_id();
    ticket.key_block = channel.key_block();
    ticket.peer = hs.peer_identities();
  }
  log_event(LogLevel::kInfo, "handshake",
            {{"phase", "Established"},
             {"session_id", b64url_encode(channel.session_id())},
             {"suite", suite_token(channel.suite())},
             {"mode", mode_name(cfg_.mode)}});
  return {std::move(channel), std::move(ticket)};
}

std::optional<ClientResponse> HttpaClient::exchange(TrustedChannel& channel, ByteView body,
                                                    const std::string& method) {
  auto& conn = connection();
  auto req = HttpMessage::request(method, url_.path);
  req.set_header(header::kContentType, std::string(kRecordContentType));
  req.set_header(header::kSessionId, b64url_encode(channel.session_id()));
  req.body = channel.seal(body, request_record_context(method, url_.path)).encode();
  auto resp = send(conn, std::move(req), std::nullopt);
  if (resp.status == 428) return std::nullopt;
  if (resp.status != 200) {
    channel.close();
    throw Error(ErrorCode::kTransport, "record request answered " + std::to_string(resp.status) +
                                           (resp.body.empty() ? "" : ": " + to_string(resp.body)));
  }
  auto frame = RecordFrame::decode(resp.body);
  ClientResponse out;
  out.status = resp.status;
  out.body = channel.open(frame, response_record_context(method, url_.path));
  return out;
}

ClientResponse HttpaClient::request(ByteView body, const std::string& method) {
  auto key = cache_key();
  auto it = tickets_.find(key);
  if (it != tickets_.end() && it->second.expired(clock_->now())) {
    tickets_.erase(it);
    save_cache();
    it = tickets_.end();
  }
  if (it != tickets_.end()) {
    auto domain = connection().peer_common_name();
    auto channel = ClientHandshake::resume(handshake_config(domain), it->second);
    auto resp = exchange(channel, body, method);
    if (resp) {
      it->second.seq_send = channel.seq_send();
      it->second.seq_recv = channel.seq_recv();
      save_cache();
      auto peer = it->second.peer;
      peer.domain = domain;
      resp->report = {{"handshake", "resumed"},
                      {"mode", mode_name(cfg_.mode)},
                      {"suite", suite_token(channel.suite())},
                      {"session_id", b64url_encode(channel.session_id())},
                      {"identities", peer.to_json()},
                      {"verdict", "Pass"}};
      return std::move(*resp);
    }
    log_event(LogLevel::kInfo, "session_unknown", {{"session_id", b64url_encode(channel.session_id())}});
    tickets_.erase(key);
    save_cache();
  }

  auto [channel, ticket] = full_handshake();
  auto resp = exchange(channel, body, method);
  if (!resp) throw Error(ErrorCode::kTransport, "server dropped a fresh session");
  if (cfg_.quote_cache_respect && ticket.max_age > 0) {
    ticket.seq_send = channel.seq_send();
    ticket.seq_recv = channel.seq_recv();
    tickets_[key] = ticket;
    save_cache();
  }
  auto peer = ticket.peer;
  resp->report = {{"handshake", "full"},
                  {"mode", mode_name(cfg_.mode)},
                  {"suite", suite_token(channel.suite())},
                  {"session_id", b64url_encode(channel.session_id())},
                  {"identities", peer.to_json()},
                  {"verdict", "Pass"}};
  return std::move(*resp);
}

}  // namespace httpa
