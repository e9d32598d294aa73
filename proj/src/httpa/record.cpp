#include "httpa/record.hpp"

#include <algorithm>
#include <cctype>

namespace httpa {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::optional<std::string_view> find_header(const std::vector<Header>& headers,
                                            std::string_view name) {
  for (const auto& h : headers) {
    if (iequals(h.name, name)) return std::string_view(h.value);
  }
  return std::nullopt;
}

}  // namespace

Bytes RecordFrame::encode() const {
  Bytes out;
  put_u64(out, seq);
  append(out, ciphertext);
  return out;
}

RecordFrame RecordFrame::decode(ByteView body) {
  if (body.size() < 8 + kAeadTagSize) {
    throw Error(ErrorCode::kMalformedRequest, "record shorter than seq + tag");
  }
  ByteReader r(body, ErrorCode::kMalformedRequest);
  RecordFrame f;
  f.seq = r.u64();
  auto ct = r.take(r.remaining());
  f.ciphertext.assign(ct.begin(), ct.end());
  return f;
}

TrustedChannel::TrustedChannel(SessionId session_id, KeyBlock key_block, Role role,
                               std::uint64_t seq_send, std::uint64_t seq_recv)
    : session_id_(session_id),
      key_block_(std::move(key_block)),
      role_(role),
      seq_send_(seq_send),
      seq_recv_(seq_recv) {}

void TrustedChannel::close() {
  if (!closed_) {
    closed_ = true;
    key_block_.destroy();
  }
}

Bytes TrustedChannel::nonce_for(ByteView iv, std::uint64_t seq) const {
  Bytes nonce(iv.begin(), iv.end());
  for (int i = 0; i < 8; ++i) {
    nonce[nonce.size() - 1 - i] ^= static_cast<std::uint8_t>(seq >> (8 * i));
  }
  return nonce;
}

Bytes TrustedChannel::aad_for(std::uint64_t seq, Role sender, ByteView context) const {
  Bytes aad(session_id_.begin(), session_id_.end());
  put_u64(aad, seq);
  aad.push_back(static_cast<std::uint8_t>(sender));
  append(aad, context);
  return aad;
}

RecordFrame TrustedChannel::seal(ByteView plaintext, ByteView aad_context) {
  if (closed_) throw Error(ErrorCode::kChannelClosed);
  if (plaintext.size() > kMaxRecordPlaintext) {
    throw Error(ErrorCode::kInvalidArgument, "record larger than 16 MiB");
  }
  if (seq_send_ == kSeqSentinel) {
    close();
    throw Error(ErrorCode::kOverflow, "send sequence exhausted");
  }
  bool client = role_ == Role::kClient;
  const auto& key = client ? key_block_.client_write_key : key_block_.server_write_key;
  const auto& iv = client ? key_block_.client_write_iv : key_block_.server_write_iv;
  RecordFrame frame;
  frame.seq = seq_send_;
  frame.ciphertext = aead_seal(suite_aead(key_block_.suite), key, nonce_for(iv, seq_send_),
                               aad_for(seq_send_, role_, aad_context), plaintext);
  ++seq_send_;
  return frame;
}

Bytes TrustedChannel::open(const RecordFrame& frame, ByteView aad_context) {
  if (closed_) throw Error(ErrorCode::kChannelClosed);
  if (frame.seq != seq_recv_) {
    close();
    throw Error(ErrorCode::kReplayOrReorder, "expected seq " + std::to_string(seq_recv_) +
                                                 ", got " + std::to_string(frame.seq));
  }
  Role peer = role_ == Role::kClient ? Role::kServer : Role::kClient;
  bool peer_client = peer == Role::kClient;
  const auto& key = peer_client ? key_block_.client_write_key : key_block_.server_write_key;
  const auto& iv = peer_client ? key_block_.client_write_iv : key_block_.server_write_iv;
  auto plain = aead_open(suite_aead(key_block_.suite), key, nonce_for(iv, frame.seq),
                         aad_for(frame.seq, peer, aad_context), frame.ciphertext);
  if (!plain) {
    close();
    throw Error(ErrorCode::kAuthFailure);
  }
  ++seq_recv_;
  return *std::move(plain);
}

AttestedHandler::AttestedHandler(std::string name, std::shared_ptr<SimulatedTee> tee, Fn fn)
    : name_(std::move(name)), tee_(std::move(tee)), fn_(std::move(fn)) {
  if (!tee_) throw Error(ErrorCode::kInvalidArgument, "handler needs a TEE");
}

RecordFrame AttestedHandler::handle(TrustedChannel& channel, const RecordFrame& request,
                                    ByteView request_context,
                                    ByteView response_context) const {
  RecordFrame reply;
  tee_->execute(
      [&](ByteView) {
        auto plaintext = channel.open(request, request_context);
        auto out = fn_(plaintext);
        secure_wipe(plaintext);
        reply = channel.seal(out, response_context);
        secure_wipe(out);
        return Bytes{};
      },
      {});
  return reply;
}

void Router::add(RouteKey key, std::shared_ptr<AttestedHandler> handler) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<Table>(*table_);
  next->push_back({std::move(key), std::move(handler)});
  table_ = std::move(next);
}

std::shared_ptr<const Router::Table> Router::snapshot() const {
  std::lock_guard lock(mu_);
  return table_;
}

std::vector<std::shared_ptr<AttestedHandler>> Router::handlers() const {
  std::vector<std::shared_ptr<AttestedHandler>> out;
  for (const auto& e : *snapshot()) {
    if (std::find(out.begin(), out.end(), e.handler) == out.end()) out.push_back(e.handler);
  }
  return out;
}

std::shared_ptr<AttestedHandler> Router::select(std::string_view path,
                                                const std::vector<Header>& headers) const {
  auto table = snapshot();
  for (const auto& e : *table) {
    if (e.key.type != RouteKey::Type::kHeader) continue;
    auto v = find_header(headers, e.key.name);
    if (v && *v == e.key.value) return e.handler;
  }
  const Entry* best = nullptr;
  for (const auto& e : *table) {
    if (e.key.type != RouteKey::Type::kPathPrefix) continue;
    if (path.substr(0, e.key.value.size()) == e.key.value &&
        (!best || e.key.value.size() > best->key.value.size())) {
      best = &e;
    }
  }
  if (!best) throw Error(ErrorCode::kNoRoute, std::string(path));
  return best->handler;
}

std::shared_ptr<AttestedHandler> Router::route(
    std::string_view path, const std::vector<Header>& headers,
    const SessionMeasurement& session_measurement) const {
  auto id = session_id_from_headers(headers);
  if (!id) throw Error(ErrorCode::kUnknownSession, "missing or bad Attest-Session-Id");
  auto measurement = session_measurement(*id);
  if (!measurement) throw Error(ErrorCode::kUnknownSession, b64url_encode(*id));
  auto handler = select(path, headers);
  if (handler->tee()->measurement() != *measurement) {
    throw Error(ErrorCode::kNoRoute, "session is bound to a different TCB");
  }
  return handler;
}

std::optional<SessionId> session_id_from_headers(const std::vector<Header>& headers) {
  auto v = find_header(headers, header::kSessionId);
  if (!v || v->size() != 22) return std::nullopt;
  auto raw = b64url_decode(*v);
  if (!raw || raw->size() != 16) return std::nullopt;
  return to_array<16>(*raw);
}

}  // namespace httpa
