#include "httpa/handshake.hpp"

#include <algorithm>
#include <cstring>

#include "httpa/rng.hpp"

namespace httpa {

std::string_view failure_reason_name(FailureReason reason) {
  switch (reason) {
    case FailureReason::kNotAttestable: return "NotAttestable";
    case FailureReason::kQuoteRejected: return "QuoteRejected";
    case FailureReason::kPolicyRejected: return "PolicyRejected";
    case FailureReason::kNoCommonSuite: return "NoCommonSuite";
    case FailureReason::kConfirmationMismatch: return "ConfirmationMismatch";
    case FailureReason::kServerRejected: return "ServerRejected";
    case FailureReason::kClientQuoteRejected: return "ClientQuoteRejected";
    case FailureReason::kStaleDate: return "StaleDate";
    case FailureReason::kBadSecret: return "BadSecret";
    case FailureReason::kModeMismatch: return "ModeMismatch";
    case FailureReason::kMalformed: return "Malformed";
  }
  return "Unknown";
}

std::string_view client_phase_name(ClientPhase phase) {
  switch (phase) {
    case ClientPhase::kStart: return "Start";
    case ClientPhase::kAwaitingPreflight: return "AwaitingPreflight";
    case ClientPhase::kAttestSent: return "AttestSent";
    case ClientPhase::kSecretSent: return "SecretSent";
    case ClientPhase::kEstablished: return "Established";
    case ClientPhase::kFailed: return "Failed";
  }
  return "Unknown";
}

std::string_view server_phase_name(ServerPhase phase) {
  switch (phase) {
    case ServerPhase::kStart: return "Start";
    case ServerPhase::kPreflightDone: return "PreflightDone";
    case ServerPhase::kAttestAnswered: return "AttestReceived";
    case ServerPhase::kEstablished: return "Established";
    case ServerPhase::kFailed: return "Failed";
  }
  return "Unknown";
}

void HandshakeConfig::validate(Role role) const {
  auto bad = [](const char* what) { throw Error(ErrorCode::kBadConfig, what); };
  if (suites.empty()) bad("cipher suite list is empty");
  if (!clock) bad("no clock");
  if (!rng) bad("no random source");
  if (role == Role::kClient) {
    if (!verifier) bad("client needs a quote verifier");
    if (mode == HandshakeMode::kMutual && !tee) bad("mutual client needs its own TEE");
  } else {
    if (!tee) bad("server needs a TEE");
    if (mode == HandshakeMode::kMutual && !verifier) {
      bad("mutual server needs a verifier for client quotes");
    }
  }
}

namespace {

bool report_trusted(const HandshakeConfig& cfg, const VerificationReport& report) {
  return cfg.verifier_roots ? report.authentic(*cfg.verifier_roots) : report.signature_valid();
}

// Verifies a peer quote and applies policy. nullopt detail = accepted.
struct PeerCheck {
  std::optional<FailureReason> reason;
  std::string detail;
  std::optional<VerificationReport> report;
  IdentityBundle bundle;
};

PeerCheck check_peer(const HandshakeConfig& cfg, ByteView quote, ByteView pubkey,
                     FailureReason quote_failure) {
  PeerCheck out;
  try {
    out.report = cfg.verifier->verify(quote, pubkey);
  } catch (const Error& e) {
    out.reason = quote_failure;
    out.detail = std::string("verifier: ") + e.what();
    return out;
  }
  if (!report_trusted(cfg, *out.report)) {
    out.reason = quote_failure;
    out.detail = std::string(fail_reason_name(FailReason::kUntrustedVerifier));
    return out;
  }
  if (!out.report->verdict.pass()) {
    out.reason = quote_failure;
    out.detail = std::string(fail_reason_name(out.report->verdict.reason));
    if (!out.report->verdict.detail.empty()) out.detail += ": " + out.report->verdict.detail;
    return out;
  }
  out.bundle = out.report->bundle;
  return out;
}

std::optional<std::string> policy_failure(const IdentityBundle& bundle, const Policy& policy) {
  auto decision = evaluate_policy(bundle, policy);
  if (decision.accepted) return std::nullopt;
  return decision.describe();
}

}  // namespace

void Transcript::add(MessageKind kind, const HttpMessage& canonical) {
  auto bytes = canonical.serialize();
  Bytes len;
  put_u32(len, static_cast<std::uint32_t>(bytes.size()));
  hash_.update(len);
  hash_.update(bytes);
  entries_.push_back({kind, std::move(bytes)});
}

std::vector<MessageKind> Transcript::kinds() const {
  std::vector<MessageKind> out;
  for (const auto& e : entries_) out.push_back(e.kind);
  return out;
}

Bytes Transcript::serialize() const {
  Bytes out;
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.bytes.size()));
    append(out, e.bytes);
  }
  return out;
}

nlohmann::json SessionTicket::to_json() const {
  return {
      {"session_id", b64url_encode(session_id)},
      {"suite", std::string(suite_token(key_block.suite))},
      {"key_block", b64url_encode(key_block.concatenated())},
      {"created_at", to_unix(created_at)},
      {"max_age", max_age},
      {"peer", peer.to_json()},
      {"seq_send", seq_send},
      {"seq_recv", seq_recv},
  };
}

SessionTicket SessionTicket::from_json(const nlohmann::json& j) {
  try {
    SessionTicket t;
    auto sid = b64url_decode(j.at("session_id").get<std::string>());
    if (!sid) throw Error(ErrorCode::kInvalidArgument, "ticket session_id");
    t.session_id = to_array<16>(*sid);
    auto suite = suite_from_token(j.at("suite").get<std::string>());
    if (!suite) throw Error(ErrorCode::kUnknownSuite, j.at("suite").get<std::string>());
    auto kb = b64url_decode(j.at("key_block").get<std::string>());
    if (!kb) throw Error(ErrorCode::kInvalidArgument, "ticket key_block");
    t.key_block = KeyBlock::partition(*suite, *kb);
    secure_wipe(*kb);
    t.created_at = from_unix(j.at("created_at").get<std::int64_t>());
    t.max_age = j.at("max_age").get<std::uint32_t>();
    t.peer = IdentityBundle::from_json(j.at("peer"));
    t.seq_send = j.at("seq_send").get<std::uint64_t>();
    t.seq_recv = j.at("seq_recv").get<std::uint64_t>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("session ticket: ") + e.what());
  }
}

// ---- client ----

ClientHandshake::ClientHandshake(HandshakeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate(Role::kClient);
  offered_.assign(cfg_.suites.begin(), cfg_.suites.end());
}

void ClientHandshake::require(ClientPhase expected) {
  if (phase_ != expected) {
    auto was = phase_;
    phase_ = ClientPhase::kFailed;
    throw Error(ErrorCode::kWrongState, "client in " + std::string(client_phase_name(was)) +
                                            ", expected " +
                                            std::string(client_phase_name(expected)));
  }
}

Failure ClientHandshake::fail(FailureReason reason, std::string detail) {
  phase_ = ClientPhase::kFailed;
  client_secret_.reset();
  failure_ = Failure{reason, std::move(detail)};
  return *failure_;
}

HttpMessage ClientHandshake::begin() {
  require(ClientPhase::kStart);
  auto msg = encode_message(PreflightRequest{});
  transcript_.add(MessageKind::kPreflightRequest, msg);
  phase_ = ClientPhase::kAwaitingPreflight;
  return msg;
}

ClientStep ClientHandshake::on_preflight_response(const HttpMessage& resp) {
  require(ClientPhase::kAwaitingPreflight);
  bool attestable = false;
  if (!resp.is_request && resp.status == 200) {
    try {
      attestable = std::holds_alternative<PreflightResponse>(decode_message(resp));
    } catch (const Error&) {
      attestable = false;
    }
  }
  if (!attestable) {
    return fail(FailureReason::kNotAttestable,
                "preflight answered " + std::to_string(resp.status) + " without Allow: ATTEST");
  }
  transcript_.add(MessageKind::kPreflightResponse, encode_message(PreflightResponse{}));

  AttestRequest req;
  req.date = cfg_.clock->now();
  client_random_ = cfg_.rng->array<32>();
  req.random = client_random_;
  req.cipher_suites = offered_;
  if (cfg_.mode == HandshakeMode::kMutual) {
    req.client_quote = cfg_.tee->generate_quote().encode();
    req.client_pubkey = to_vector(cfg_.tee->public_key());
  }
  auto msg = encode_message(req);
  transcript_.add(MessageKind::kAttestRequest, msg);
  phase_ = ClientPhase::kAttestSent;
  return msg;
}

ClientStep ClientHandshake::on_attest_response(const HttpMessage& resp) {
  require(ClientPhase::kAttestSent);
  AttestMessage decoded;
  try {
    if (resp.is_request || resp.status != 200) {
      return fail(FailureReason::kServerRejected,
                  "attest request answered with status " + std::to_string(resp.status));
    }
    decoded = decode_message(resp);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  if (!std::holds_alternative<AttestResponse>(decoded)) {
    return fail(FailureReason::kMalformed,
                "expected AttestResponse, got " +
                    std::string(message_kind_name(kind_of(decoded))));
  }
  return on_attest_response(std::get<AttestResponse>(decoded));
}

ClientStep ClientHandshake::on_attest_response(const AttestResponse& resp) {
  require(ClientPhase::kAttestSent);
  HttpMessage canonical;
  try {
    canonical = encode_message(resp);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  transcript_.add(MessageKind::kAttestResponse, canonical);

  if (!resp.cipher_suite.recognized() ||
      std::find(offered_.begin(), offered_.end(), resp.cipher_suite) == offered_.end()) {
    return fail(FailureReason::kNoCommonSuite,
                "server picked " + resp.cipher_suite.token() + ", which was not offered");
  }

  auto peer = check_peer(cfg_, resp.quote, resp.pubkey, FailureReason::kQuoteRejected);
  report_ = peer.report;
  if (peer.reason) return fail(*peer.reason, peer.detail);
  peer_ = peer.bundle;
  peer_.domain = cfg_.peer_domain;
  if (auto why = policy_failure(peer_, cfg_.policy)) {
    return fail(FailureReason::kPolicyRejected, *why);
  }

  suite_ = resp.cipher_suite.suite();
  server_random_ = resp.random;
  session_id_ = resp.session_id;
  max_age_ = resp.max_age;
  if (cfg_.mode == HandshakeMode::kMutual) cfg_.tee->provide_randoms(client_random_, server_random_);

  client_secret_.emplace(PreSessionSecret::generate(*cfg_.rng));
  TrustedSessionRequest req;
  req.session_id = session_id_;
  try {
    req.secret = wrap_secret(resp.pubkey, *client_secret_, transcript_.hash(), *cfg_.rng).encode();
  } catch (const Error& e) {
    return fail(FailureReason::kQuoteRejected, std::string("server key unusable: ") + e.what());
  }
  auto msg = encode_message(req);
  transcript_.add(MessageKind::kTrustedSessionRequest, msg);
  session_hash_ = transcript_.hash();
  phase_ = ClientPhase::kSecretSent;
  return msg;
}

ClientFinish ClientHandshake::on_session_response(const HttpMessage& resp) {
  require(ClientPhase::kSecretSent);
  AttestMessage decoded;
  try {
    if (resp.is_request || resp.status != 200) {
      return fail(FailureReason::kServerRejected,
                  "trusted session request answered with status " +
                      std::to_string(resp.status));
    }
    decoded = decode_message(resp);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  if (!std::holds_alternative<TrustedSessionResponse>(decoded)) {
    return fail(FailureReason::kMalformed,
                "expected TrustedSessionResponse, got " +
                    std::string(message_kind_name(kind_of(decoded))));
  }
  return on_session_response(std::get<TrustedSessionResponse>(decoded));
}

ClientFinish ClientHandshake::on_session_response(const TrustedSessionResponse& resp) {
  require(ClientPhase::kSecretSent);
  HttpMessage canonical;
  try {
    canonical = encode_message(resp);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  if (resp.session_id != session_id_) {
    return fail(FailureReason::kConfirmationMismatch, "session id changed");
  }

  std::vector<PreSessionSecret> secrets;
  if (cfg_.mode == HandshakeMode::kMutual) {
    if (!resp.server_secret) {
      return fail(FailureReason::kModeMismatch, "mutual session response lacks Attest-Secret");
    }
    try {
      auto wrapped = WrappedSecret::decode(*resp.server_secret);
      secrets.push_back(unwrap_secret(*cfg_.tee, wrapped, session_hash_));
    } catch (const Error& e) {
      return fail(FailureReason::kBadSecret, e.what());
    }
  } else if (resp.server_secret) {
    return fail(FailureReason::kModeMismatch, "one-way session response carries Attest-Secret");
  }
  secrets.push_back(*client_secret_);
  auto kb = derive_key_block(cfg_.mode, secrets, client_random_, server_random_, suite_);
  for (auto& s : secrets) s.destroy();
  client_secret_.reset();

  auto expected = confirmation_mac(kb, session_hash_, Role::kServer);
  if (!constant_time_equal(expected, resp.confirmation)) {
    kb.destroy();
    return fail(FailureReason::kConfirmationMismatch, "server confirmation does not match");
  }
  transcript_.add(MessageKind::kTrustedSessionResponse, canonical);
  phase_ = ClientPhase::kEstablished;

  if (cfg_.quote_cache_respect) {
    SessionTicket t;
    t.session_id = session_id_;
    t.key_block = kb;
    t.created_at = cfg_.clock->now();
    t.max_age = max_age_;
    t.peer = peer_;
    ticket_ = std::move(t);
  }
  return TrustedChannel(session_id_, std::move(kb), Role::kClient);
}

TrustedChannel ClientHandshake::resume(const HandshakeConfig& cfg, const SessionTicket& ticket) {
  if (!cfg.clock) throw Error(ErrorCode::kBadConfig, "no clock");
  if (ticket.expired(cfg.clock->now())) {
    throw Error(ErrorCode::kTicketExpired, b64url_encode(ticket.session_id));
  }
  auto peer = ticket.peer;
  peer.domain = cfg.peer_domain;
  if (auto why = policy_failure(peer, cfg.policy)) throw Error(ErrorCode::kPolicyRejected, *why);
  return TrustedChannel(ticket.session_id, ticket.key_block, Role::kClient, ticket.seq_send,
                        ticket.seq_recv);
}

// ---- server ----

ServerHandshake::ServerHandshake(HandshakeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate(Role::kServer);
}

void ServerHandshake::require(ServerPhase expected) {
  if (phase_ != expected) {
    auto was = phase_;
    phase_ = ServerPhase::kFailed;
    throw Error(ErrorCode::kWrongState, "server in " + std::string(server_phase_name(was)) +
                                            ", expected " +
                                            std::string(server_phase_name(expected)));
  }
}

Failure ServerHandshake::fail(FailureReason reason, std::string detail) {
  phase_ = ServerPhase::kFailed;
  failure_ = Failure{reason, std::move(detail)};
  return *failure_;
}

HttpMessage ServerHandshake::emit(const AttestMessage& msg) {
  auto http = encode_message(msg);
  transcript_.add(kind_of(msg), http);
  emitted_.push_back(kind_of(msg));
  return http;
}

std::optional<TrustedChannel> ServerHandshake::take_channel() {
  auto out = std::move(channel_);
  channel_.reset();
  return out;
}

ServerStep ServerHandshake::on_message(const HttpMessage& msg) {
  if (phase_ == ServerPhase::kFailed || phase_ == ServerPhase::kEstablished) {
    throw Error(ErrorCode::kWrongState,
                "server handshake is " + std::string(server_phase_name(phase_)));
  }
  AttestMessage decoded;
  try {
    decoded = decode_message(msg);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  return on_message(decoded);
}

ServerStep ServerHandshake::on_message(const AttestMessage& msg) {
  switch (kind_of(msg)) {
    case MessageKind::kPreflightRequest:
      require(ServerPhase::kStart);
      return on_preflight();
    case MessageKind::kAttestRequest:
      require(ServerPhase::kPreflightDone);
      return on_attest_request(std::get<AttestRequest>(msg));
    case MessageKind::kTrustedSessionRequest:
      require(ServerPhase::kAttestAnswered);
      return on_session_request(std::get<TrustedSessionRequest>(msg));
    default: {
      auto was = phase_;
      phase_ = ServerPhase::kFailed;
      throw Error(ErrorCode::kWrongState,
                  "server cannot accept " + std::string(message_kind_name(kind_of(msg))) +
                      " in " + std::string(server_phase_name(was)));
    }
  }
}

ServerStep ServerHandshake::on_preflight() {
  transcript_.add(MessageKind::kPreflightRequest, encode_message(PreflightRequest{}));
  auto out = emit(PreflightResponse{});
  phase_ = ServerPhase::kPreflightDone;
  return out;
}

ServerStep ServerHandshake::on_attest_request(const AttestRequest& req) {
  HttpMessage canonical;
  try {
    canonical = encode_message(req);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  transcript_.add(MessageKind::kAttestRequest, canonical);

  bool mutual = cfg_.mode == HandshakeMode::kMutual;
  if (req.mutual() != mutual) {
    return fail(FailureReason::kModeMismatch,
                mutual ? "mutual server got a request without a client quote"
                       : "one-way server got a client quote");
  }
  if (mutual) {
    if (!req.date) return fail(FailureReason::kStaleDate, "mutual request lacks Attest-Date");
    auto skew = to_unix(cfg_.clock->now()) - to_unix(*req.date);
    if (skew > kMaxMutualDateSkew || skew < -kMaxMutualDateSkew) {
      return fail(FailureReason::kStaleDate, "Attest-Date off by " + std::to_string(skew) + "s");
    }
    auto peer = check_peer(cfg_, *req.client_quote, *req.client_pubkey,
                           FailureReason::kClientQuoteRejected);
    if (peer.reason) return fail(*peer.reason, peer.detail);
    if (auto why = policy_failure(peer.bundle, cfg_.policy)) {
      return fail(FailureReason::kClientQuoteRejected, "policy: " + *why);
    }
    peer_ = peer.bundle;
    client_pubkey_ = *req.client_pubkey;
  }

  std::set<CipherSuite> supported(cfg_.suites.begin(), cfg_.suites.end());
  try {
    suite_ = negotiate_suite(req.cipher_suites, supported);
  } catch (const Error& e) {
    return fail(FailureReason::kNoCommonSuite, e.what());
  }

  client_random_ = req.random;
  server_random_ = cfg_.rng->array<32>();
  session_id_ = cfg_.rng->array<16>();
  cfg_.tee->provide_randoms(client_random_, server_random_);

  AttestResponse resp;
  resp.date = cfg_.clock->now();
  resp.quote = cfg_.tee->generate_quote().encode();
  resp.max_age = cfg_.quote_max_age;
  resp.pubkey = to_vector(cfg_.tee->public_key());
  resp.random = server_random_;
  resp.session_id = session_id_;
  resp.cipher_suite = suite_;
  auto out = emit(resp);
  phase_ = ServerPhase::kAttestAnswered;
  return out;
}

ServerStep ServerHandshake::on_session_request(const TrustedSessionRequest& req) {
  HttpMessage canonical;
  try {
    canonical = encode_message(req);
  } catch (const Error& e) {
    return fail(FailureReason::kMalformed, e.what());
  }
  auto wrap_hash = transcript_.hash();
  transcript_.add(MessageKind::kTrustedSessionRequest, canonical);
  auto session_hash = transcript_.hash();

  if (req.session_id != session_id_) {
    return fail(FailureReason::kMalformed, "unknown Attest-Session-Id");
  }

  std::vector<PreSessionSecret> secrets;
  TrustedSessionResponse resp;
  resp.session_id = session_id_;
  if (cfg_.mode == HandshakeMode::kMutual) {
    secrets.push_back(PreSessionSecret::generate(*cfg_.rng));
    resp.server_secret =
        wrap_secret(*client_pubkey_, secrets.back(), session_hash, *cfg_.rng).encode();
  }
  try {
    auto wrapped = WrappedSecret::decode(req.secret);
    secrets.push_back(unwrap_secret(*cfg_.tee, wrapped, wrap_hash));
  } catch (const Error& e) {
    return fail(FailureReason::kBadSecret, e.what());
  }

  auto kb = derive_key_block(cfg_.mode, secrets, client_random_, server_random_, suite_);
  for (auto& s : secrets) s.destroy();
  resp.confirmation = confirmation_mac(kb, session_hash, Role::kServer);
  auto out = emit(resp);
  channel_.emplace(session_id_, std::move(kb), Role::kServer);
  phase_ = ServerPhase::kEstablished;
  return out;
}

// ---- session cache ----

std::size_t SessionCache::IdHash::operator()(const SessionId& id) const noexcept {
  std::size_t h = 0;
  std::memcpy(&h, id.data(), sizeof(h));
  return h;
}

SessionCache::SessionCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::kBadConfig, "session cache capacity is zero");
}

void SessionCache::put(std::shared_ptr<ServerSession> session) {
  std::lock_guard lock(mu_);
  auto id = session->channel.session_id();
  if (auto it = index_.find(id); it != index_.end()) {
    order_.erase(it->second);
    index_.erase(it);
  }
  order_.push_front(std::move(session));
  index_[id] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back()->channel.session_id());
    order_.pop_back();
  }
}

std::shared_ptr<ServerSession> SessionCache::get(const SessionId& id, Timestamp now) {
  std::lock_guard lock(mu_);
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  auto session = *it->second;
  if (session->expired(now)) {
    order_.erase(it->second);
    index_.erase(it);
    return nullptr;
  }
  order_.splice(order_.begin(), order_, it->second);
  return session;
}

std::shared_ptr<ServerSession> SessionCache::lookup(const SessionId& id, Timestamp now) {
  auto s = get(id, now);
  if (!s) throw Error(ErrorCode::kFullHandshakeRequired, b64url_encode(id));
  return s;
}

void SessionCache::erase(const SessionId& id) {
  std::lock_guard lock(mu_);
  if (auto it = index_.find(id); it != index_.end()) {
    order_.erase(it->second);
    index_.erase(it);
  }
}

void SessionCache::clear() {
  std::lock_guard lock(mu_);
  order_.clear();
  index_.clear();
}

std::size_t SessionCache::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

}  // namespace httpa
