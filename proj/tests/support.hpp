#pragma once

// Shared fixtures for the unit and acceptance tests: a demo PKI, TEEs, a
// verifier, and an in-memory driver that runs a client and a server
// handshake against each other with an optional tampering hook.

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "httpa/clock.hpp"
#include "httpa/handshake.hpp"
#include "httpa/pki.hpp"
#include "httpa/quote.hpp"
#include "httpa/rng.hpp"
#include "httpa/verify.hpp"

namespace httpa::test {

inline constexpr std::int64_t kTestEpoch = 1700000000;

struct World {
  std::shared_ptr<ManualClock> clock;
  std::shared_ptr<SeededRng> setup_rng;
  DemoPki pki;
  std::shared_ptr<SimulatedTee> server_tee;
  std::shared_ptr<SimulatedTee> client_tee;
  std::shared_ptr<Verifier> verifier;

  explicit World(std::uint64_t seed = 1)
      : clock(std::make_shared<ManualClock>(kTestEpoch)),
        setup_rng(std::make_shared<SeededRng>(seed, "setup")),
        pki(make_demo_pki(*setup_rng)) {
    server_tee = SimulatedTee::create(as_bytes("demo-server-app"), pki.tcb, pki.quote_roots(),
                                      *setup_rng);
    client_tee = SimulatedTee::create(as_bytes("demo-client-app"), pki.tcb, pki.quote_roots(),
                                      *setup_rng);
    verifier = std::make_shared<Verifier>(pki.verifier, pki.quote_roots(), clock);
  }

  HandshakeConfig client_config(HandshakeMode mode, std::shared_ptr<Rng> rng = nullptr) const {
    HandshakeConfig cfg;
    cfg.mode = mode;
    cfg.clock = clock;
    cfg.rng = rng ? rng : std::make_shared<SystemRng>();
    cfg.verifier = std::make_shared<LocalQuoteVerifier>(verifier);
    cfg.verifier_roots = pki.verifier_roots();
    if (mode == HandshakeMode::kMutual) cfg.tee = client_tee;
    return cfg;
  }

  HandshakeConfig server_config(HandshakeMode mode, std::shared_ptr<Rng> rng = nullptr) const {
    HandshakeConfig cfg;
    cfg.mode = mode;
    cfg.clock = clock;
    cfg.rng = rng ? rng : std::make_shared<SystemRng>();
    cfg.tee = server_tee;
    if (mode == HandshakeMode::kMutual) {
      cfg.verifier = std::make_shared<LocalQuoteVerifier>(verifier);
      cfg.verifier_roots = pki.verifier_roots();
    }
    return cfg;
  }
};

// Called for each message in flight; may modify it.
using Tamper = std::function<void(MessageKind kind, HttpMessage& msg)>;

struct Run {
  ClientHandshake client;
  ServerHandshake server;
  std::optional<TrustedChannel> client_channel;
  std::optional<TrustedChannel> server_channel;
  std::optional<Failure> client_failure;
  std::optional<Failure> server_failure;
  // Kinds that actually crossed the wire, in order.
  std::vector<MessageKind> wire;

  bool established() const { return client_channel && server_channel; }
};

inline MessageKind wire_kind(const HttpMessage& m) {
  try {
    return classify(m);
  } catch (const Error&) {
    return m.is_request ? MessageKind::kAttestRequest : MessageKind::kAttestResponse;
  }
}

// Runs the three exchanges. Stops at the first failure on either side.
inline std::unique_ptr<Run> run_handshake(HandshakeConfig ccfg, HandshakeConfig scfg,
                                          const Tamper& tamper = {}) {
  auto run = std::unique_ptr<Run>(new Run{ClientHandshake(std::move(ccfg)),
                                          ServerHandshake(std::move(scfg)), {}, {}, {}, {}, {}});
  auto send = [&](HttpMessage m) {
    auto kind = wire_kind(m);
    if (tamper) tamper(kind, m);
    run->wire.push_back(kind);
    return m;
  };
  auto server_step = [&](const HttpMessage& m) -> std::optional<HttpMessage> {
    auto r = run->server.on_message(m);
    if (auto* f = std::get_if<Failure>(&r)) {
      run->server_failure = *f;
      return std::nullopt;
    }
    return send(std::get<HttpMessage>(std::move(r)));
  };

  auto pre = send(run->client.begin());
  auto pre_resp = server_step(pre);
  if (!pre_resp) return run;
  auto a = run->client.on_preflight_response(*pre_resp);
  if (auto* f = std::get_if<Failure>(&a)) {
    run->client_failure = *f;
    return run;
  }
  auto attest_resp = server_step(send(std::get<HttpMessage>(std::move(a))));
  if (!attest_resp) return run;
  auto b = run->client.on_attest_response(*attest_resp);
  if (auto* f = std::get_if<Failure>(&b)) {
    run->client_failure = *f;
    return run;
  }
  auto session_resp = server_step(send(std::get<HttpMessage>(std::move(b))));
  if (!session_resp) return run;
  run->server_channel = run->server.take_channel();
  auto c = run->client.on_session_response(*session_resp);
  if (auto* f = std::get_if<Failure>(&c)) {
    run->client_failure = *f;
    return run;
  }
  run->client_channel.emplace(std::get<TrustedChannel>(std::move(c)));
  return run;
}

}  // namespace httpa::test
