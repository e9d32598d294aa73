#include "httpa/server.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "httpa/log.hpp"
#include "httpa/rng.hpp"

namespace httpa {

namespace {

const std::vector<std::string> kDemoHandlers = {"echo", "upper", "sha256"};

HttpMessage status_response(int status, std::string_view detail = {}) {
  auto r = HttpMessage::response(status);
  if (!detail.empty()) {
    r.set_header("Content-Type", "text/plain");
    r.body = to_bytes(detail);
  }
  return r;
}

std::string path_of(std::string_view target) {
  auto q = target.find('?');
  return std::string(target.substr(0, q));
}

void write_file(const std::string& path, ByteView bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <class T>
std::optional<T> opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

std::vector<CipherSuite> parse_suite_list(const std::vector<std::string>& tokens) {
  std::vector<CipherSuite> out;
  for (const auto& t : tokens) {
    auto s = suite_from_token(t);
    if (!s) throw Error(ErrorCode::kBadConfig, "unknown cipher suite " + t);
    out.push_back(*s);
  }
  return out;
}

Bytes demo_handler(const std::string& name, ByteView body) {
  if (name == "echo") return Bytes(body.begin(), body.end());
  if (name == "upper") {
    Bytes out(body.begin(), body.end());
    for (auto& c : out) c = static_cast<std::uint8_t>(std::toupper(c));
    return out;
  }
  if (name == "sha256") return to_bytes(hex_encode(sha256(body)));
  throw Error(ErrorCode::kBadConfig, "unknown handler " + name);
}

ServerConfig ServerConfig::from_json(const nlohmann::json& j) {
  try {
    ServerConfig c;
    if (auto v = opt<std::string>(j, "host")) c.host = *v;
    if (auto v = opt<std::uint16_t>(j, "port")) c.port = *v;
    auto cert = opt<std::string>(j, "tls_cert");
    auto key = opt<std::string>(j, "tls_key");
    if (cert || key) {
      if (!cert || !key) throw Error(ErrorCode::kBadConfig, "tls needs both tls_cert and tls_key");
      c.tls = TlsServerOptions{*cert, *key};
    }
    if (auto v = opt<std::string>(j, "mode")) {
      if (*v == "one-way") c.mode = HandshakeMode::kOneWay;
      else if (*v == "mutual") c.mode = HandshakeMode::kMutual;
      else throw Error(ErrorCode::kBadConfig, "mode must be one-way or mutual");
    }
    if (auto v = opt<std::vector<std::string>>(j, "handlers")) c.handlers = *v;
    if (auto v = opt<std::string>(j, "credentials")) c.credentials_path = *v;
    if (auto v = opt<std::string>(j, "roots")) c.roots_path = *v;
    c.policy_path = opt<std::string>(j, "policy");
    if (auto v = opt<std::uint32_t>(j, "max_age")) c.max_age = *v;
    if (auto v = opt<std::vector<std::string>>(j, "suites")) c.suites = parse_suite_list(*v);
    if (auto v = opt<std::size_t>(j, "session_capacity")) c.session_capacity = *v;
    c.seed = opt<std::uint64_t>(j, "seed");
    if (auto v = opt<std::int64_t>(j, "now")) c.now = *v;
    if (auto v = opt<bool>(j, "test_mode")) c.test_mode = *v;
    c.transcript_path = opt<std::string>(j, "transcript");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, std::string("server config: ") + e.what());
  }
}

void ServerConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kBadConfig, what); };
  if (credentials_path.empty()) bad("credentials path is required");
  if (roots_path.empty()) {
    bad(mode == HandshakeMode::kMutual ? "mutual mode requires roots for client quotes"
                                       : "roots path is required");
  }
  if (handlers.empty()) bad("no handlers configured");
  for (const auto& h : handlers) {
    if (std::find(kDemoHandlers.begin(), kDemoHandlers.end(), h) == kDemoHandlers.end()) {
      bad("unknown handler " + h);
    }
  }
  if (suites.empty()) bad("cipher suite list is empty");
  if (session_capacity == 0) bad("session capacity is zero");
  if (seed && tls && !test_mode) bad("--seed is refused with TLS outside test mode");
}

// Per-connection state: at most one handshake in progress.
class HttpaServer::Connection {
 public:
  Connection(HttpaServer& server, std::uint64_t id) : s_(server), id_(id) {}

  HttpMessage handle(const HttpMessage& req) {
    auto ct = req.header(header::kContentType);
    if (ct && *ct == kRecordContentType) return on_record(req);

    MessageKind kind;
    try {
      kind = classify(req);
    } catch (const Error& e) {
      s_.record_trace(id_, "recv non-httpa " + req.method);
      return status_response(e.code() == ErrorCode::kNotHttpa ? 404 : 400, e.what());
    }
    s_.record_trace(id_, "recv " + std::string(message_kind_name(kind)));
    if (kind == MessageKind::kPreflightRequest) {
      {
        std::lock_guard lock(s_.mu_);
        ++s_.stats_.preflights;
      }
      try {
        handler_ = s_.router_.select(path_of(req.target), req.headers);
      } catch (const Error& e) {
        s_.record_trace(id_, "send 404");
        return status_response(404, e.what());
      }
      hs_.emplace(s_.handshake_config(handler_->tee()));
    } else {
      std::lock_guard lock(s_.mu_);
      ++s_.stats_.attest_requests;
    }
    if (!hs_) {
      s_.record_trace(id_, "send 400");
      return status_response(400, "WrongState: no preflight on this connection");
    }
    return step(req);
  }

 private:
  HttpMessage step(const HttpMessage& req) {
    ServerStep r;
    try {
      r = hs_->on_message(req);
    } catch (const Error& e) {
      hs_.reset();
      s_.record_trace(id_, "send 400");
      return status_response(400, e.what());
    }
    if (auto* f = std::get_if<Failure>(&r)) {
      log_event(LogLevel::kWarn, "handshake",
                {{"connection", id_}, {"phase", "Failed"}, {"reason", failure_reason_name(f->reason)},
                 {"detail", f->detail}, {"handler", handler_->name()}});
      {
        std::lock_guard lock(s_.mu_);
        ++s_.stats_.aborted;
      }
      hs_.reset();
      s_.record_trace(id_, "send 403");
      s_.record_trace(id_, "close");
      auto out = status_response(403, failure_reason_name(f->reason));
      out.set_header("Connection", "close");
      return out;
    }
    auto out = std::get<HttpMessage>(std::move(r));
    s_.record_trace(id_, "send " + std::string(message_kind_name(classify(out))));
    if (hs_->phase() == ServerPhase::kEstablished) {
      established();
    } else {
      log_event(LogLevel::kDebug, "handshake",
                {{"connection", id_}, {"phase", server_phase_name(hs_->phase())},
                 {"handler", handler_->name()}});
    }
    return out;
  }

  void established() {
    auto channel = hs_->take_channel();
    auto sid = channel->session_id();
    auto suite = channel->suite();
    s_.sessions_->put(std::make_shared<ServerSession>(std::move(*channel), s_.clock_->now(),
                                                      s_.cfg_.max_age, hs_->peer_identities(),
                                                      handler_->tee()->measurement()));
    nlohmann::json fields = {{"connection", id_},
                             {"phase", "Established"},
                             {"session_id", b64url_encode(sid)},
                             {"mode", mode_name(s_.cfg_.mode)},
                             {"suite", suite_token(suite)},
                             {"handler", handler_->name()}};
    if (hs_->peer_identities()) {
      fields["client_identities"] = hs_->peer_identities()->to_json();
      fields["verdict"] = "Pass";
    }
    log_event(LogLevel::kInfo, "handshake", fields);
    if (s_.cfg_.transcript_path) write_file(*s_.cfg_.transcript_path, hs_->transcript().serialize());
    {
      std::lock_guard lock(s_.mu_);
      ++s_.stats_.established;
    }
    hs_.reset();
  }

  HttpMessage on_record(const HttpMessage& req) {
    {
      std::lock_guard lock(s_.mu_);
      ++s_.stats_.records;
    }
    s_.record_trace(id_, "recv record");
    auto sid = session_id_from_headers(req.headers);
    if (!sid) return status_response(400, "missing or bad Attest-Session-Id");
    auto session = s_.sessions_->get(*sid, s_.clock_->now());
    if (!session) {
      s_.record_trace(id_, "send 428");
      return status_response(428, "FullHandshakeRequired");
    }
    std::shared_ptr<AttestedHandler> handler;
    try {
      handler = s_.router_.route(path_of(req.target), req.headers,
                                 [&](const SessionId&) { return std::optional(session->measurement); });
    } catch (const Error& e) {
      return status_response(404, e.what());
    }
    RecordFrame frame;
    try {
      frame = RecordFrame::decode(req.body);
    } catch (const Error& e) {
      return status_response(400, e.what());
    }
    RecordFrame reply;
    {
      std::lock_guard lock(session->mu);
      try {
        reply = handler->handle(session->channel, frame,
                                request_record_context(req.method, req.target),
                                response_record_context(req.method, req.target));
      } catch (const Error& e) {
        s_.sessions_->erase(*sid);
        log_event(LogLevel::kWarn, "record_rejected",
                  {{"session_id", b64url_encode(*sid)}, {"error", e.what()}});
        s_.record_trace(id_, "send 400");
        return status_response(400, e.what());
      }
    }
    auto out = HttpMessage::response(200);
    out.set_header(header::kContentType, std::string(kRecordContentType));
    out.set_header(header::kSessionId, b64url_encode(*sid));
    out.body = reply.encode();
    s_.record_trace(id_, "send record");
    return out;
  }

  HttpaServer& s_;
  std::uint64_t id_;
  std::optional<ServerHandshake> hs_;
  std::shared_ptr<AttestedHandler> handler_;
};

HttpaServer::HttpaServer(ServerConfig cfg, std::shared_ptr<const Clock> clock)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (clock) {
    clock_ = std::move(clock);
  } else if (cfg_.seed) {
    clock_ = std::make_shared<ManualClock>(cfg_.now);
  } else {
    clock_ = std::make_shared<SystemClock>();
  }
  std::shared_ptr<Rng> tee_rng;
  if (cfg_.seed) {
    rng_ = std::make_shared<SeededRng>(*cfg_.seed, "server");
    tee_rng = std::make_shared<SeededRng>(*cfg_.seed, "server-tee");
  } else {
    rng_ = std::make_shared<SystemRng>();
    tee_rng = rng_;
  }
  auto creds = load_credentials(cfg_.credentials_path);
  auto roots = load_trust_store(cfg_.roots_path);
  for (const auto& name : cfg_.handlers) {
    auto tee = SimulatedTee::create(as_bytes("httpa-demo-handler:" + name), creds, roots, *tee_rng);
    auto handler = std::make_shared<AttestedHandler>(
        name, tee, [name](ByteView body) { return demo_handler(name, body); });
    router_.add(RouteKey::header("X-Service", name), handler);
    router_.add(RouteKey::path_prefix("/" + name), handler);
  }
  if (cfg_.mode == HandshakeMode::kMutual) {
    client_verifier_ = std::make_shared<LocalQuoteVerifier>(
        Verifier::in_process("CN=HTTPA Server Local Verifier", roots, clock_, *tee_rng));
    if (cfg_.policy_path) client_policy_ = Policy::load(*cfg_.policy_path);
  }
  sessions_ = std::make_shared<SessionCache>(cfg_.session_capacity);
}

HttpaServer::~HttpaServer() { stop(); }

HandshakeConfig HttpaServer::handshake_config(std::shared_ptr<SimulatedTee> tee) const {
  HandshakeConfig hc;
  hc.mode = cfg_.mode;
  hc.suites = cfg_.suites;
  hc.policy = client_policy_;
  hc.clock = clock_;
  hc.rng = rng_;
  hc.verifier = client_verifier_;
  hc.tee = std::move(tee);
  hc.quote_max_age = cfg_.max_age;
  return hc;
}

RequestHandler HttpaServer::make_connection() {
  std::uint64_t id;
  {
    std::lock_guard lock(mu_);
    id = next_connection_++;
  }
  auto conn = std::make_shared<Connection>(*this, id);
  return [conn](const HttpMessage& req) { return conn->handle(req); };
}

void HttpaServer::start() {
  if (listener_) return;
  listener_ = std::make_unique<HttpListener>(cfg_.host, cfg_.port, cfg_.tls,
                                             [this] { return make_connection(); });
  listener_->start();
  log_event(LogLevel::kInfo, "listening",
            {{"host", cfg_.host}, {"port", listener_->port()}, {"mode", mode_name(cfg_.mode)},
             {"tls", cfg_.tls.has_value()}, {"handlers", cfg_.handlers}});
}

std::uint16_t HttpaServer::port() const {
  if (!listener_) throw Error(ErrorCode::kWrongState, "server not started");
  return listener_->port();
}

void HttpaServer::stop() {
  if (!listener_) return;
  listener_->stop();
  listener_.reset();
  sessions_->clear();
  log_event(LogLevel::kInfo, "stopped");
}

HttpaServer::Stats HttpaServer::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<TraceEvent> HttpaServer::trace() const {
  std::lock_guard lock(mu_);
  return trace_;
}

void HttpaServer::record_trace(std::uint64_t conn, std::string what) {
  std::lock_guard lock(mu_);
  if (trace_.size() < 100000) trace_.push_back({conn, std::move(what)});
}

}  // namespace httpa
