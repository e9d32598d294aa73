// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "golden.hpp"
#include "httpa/client.hpp"
#include "httpa/log.hpp"
#include "httpa/prf.hpp"
#include "httpa/server.hpp"
#include "httpa/service.hpp"
#include "support.hpp"

extern char** environ;

namespace httpa {
namespace {

namespace fs = std::filesystem;
using test::run_handshake;
using test::World;

struct Outcome {
  bool pass;
  std::string note;
};

// Throws with a message; caught per criterion and reported as FAIL.
struct Failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Failed(what);
}

std::string kinds_str(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& k : v) out += (out.empty() ? "" : "→") + k;
  return out;
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("httpa-acceptance-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- 1 ----

Outcome handshake_agreement() {
  auto start = std::chrono::steady_clock::now();
  World w(11);
  std::mt19937_64 g(2024);
  int mutual = 0;
  for (int i = 0; i < 1000; ++i) {
    auto mode = g() % 2 ? HandshakeMode::kMutual : HandshakeMode::kOneWay;
    std::vector<CipherSuite> client_suites(kAllCipherSuites.begin(), kAllCipherSuites.end());
    std::shuffle(client_suites.begin(), client_suites.end(), g);
    client_suites.resize(1 + g() % 3);
    // Server supports a random subset that shares at least one suite.
    std::vector<CipherSuite> server_suites{client_suites[g() % client_suites.size()]};
    for (auto s : kAllCipherSuites) {
      if (s != server_suites[0] && g() % 2) server_suites.push_back(s);
    }
    auto ccfg = w.client_config(mode, std::make_shared<SeededRng>(g(), "client"));
    auto scfg = w.server_config(mode, std::make_shared<SeededRng>(g(), "server"));
    ccfg.suites = client_suites;
    scfg.suites = server_suites;
    auto run = run_handshake(ccfg, scfg);
    require(run->established(), "handshake " + std::to_string(i) + " did not establish");
    require(run->client.phase() == ClientPhase::kEstablished &&
                run->server.phase() == ServerPhase::kEstablished,
            "phase not Established");
    require(run->client_channel->key_block().concatenated() ==
                run->server_channel->key_block().concatenated(),
            "key blocks differ in handshake " + std::to_string(i));
    auto expected = *std::find_if(client_suites.begin(), client_suites.end(), [&](CipherSuite s) {
      return std::find(server_suites.begin(), server_suites.end(), s) != server_suites.end();
    });
    require(run->client_channel->suite() == expected, "suite is not the client's first common choice");
    if (mode == HandshakeMode::kMutual) ++mutual;
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(secs < 30.0, "took " + std::to_string(secs) + " s");
  char note[128];
  std::snprintf(note, sizeof note, "1000 handshakes (%d mutual) identical key blocks in %.1f s",
                mutual, secs);
  return {true, note};
}

// ---- loopback fixture ----

struct Loopback {
  fs::path dir;
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(test::kTestEpoch);
  std::unique_ptr<HttpaServer> server;

  Loopback(const std::string& name, HandshakeMode mode) : dir(scratch_dir(name)) {
    keygen({dir.string(), 5, false});
    ServerConfig cfg;
    cfg.mode = mode;
    cfg.credentials_path = (dir / "tcb_credentials.json").string();
    cfg.roots_path = (dir / "roots.json").string();
    cfg.transcript_path = (dir / "server_transcript.bin").string();
    server = std::make_unique<HttpaServer>(cfg, clock);
    server->start();
  }

  ClientConfig client(HandshakeMode mode, const std::string& path = "/echo") const {
    ClientConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(server->port()) + path;
    c.mode = mode;
    c.roots_path = (dir / "roots.json").string();
    if (mode == HandshakeMode::kMutual) c.credentials_path = (dir / "tcb_credentials.json").string();
    c.session_cache_path = (dir / "tickets.json").string();
    c.transcript_path = (dir / "client_transcript.bin").string();
    return c;
  }

  std::vector<std::string> trace_of(std::uint64_t conn) const {
    std::vector<std::string> out;
    for (const auto& t : server->trace()) {
      if (t.connection == conn) out.push_back(t.what);
    }
    return out;
  }
};

// Preflight request+response counted as one step.
std::vector<std::string> collapse(const std::vector<MessageKind>& kinds) {
  std::vector<std::string> out;
  for (auto k : kinds) {
    switch (k) {
      case MessageKind::kPreflightRequest: out.push_back("Preflight"); break;
      case MessageKind::kPreflightResponse: break;
      case MessageKind::kAttestRequest: out.push_back("AttestReq"); break;
      case MessageKind::kAttestResponse: out.push_back("AttestResp"); break;
      case MessageKind::kTrustedSessionRequest: out.push_back("SessionReq"); break;
      case MessageKind::kTrustedSessionResponse: out.push_back("SessionResp"); break;
    }
  }
  return out;
}

// Kinds of a serialized transcript file, by reading each message's start line.
std::vector<MessageKind> kinds_from_file(const fs::path& path) {
  auto bytes = test::read_file(path.string());
  require(bytes.has_value(), "missing " + path.string());
  std::vector<MessageKind> out;
  std::size_t i = 0;
  std::optional<MessageKind> last_request;
  while (i < bytes->size()) {
    require(i + 4 <= bytes->size(), "truncated transcript");
    std::size_t n = (std::size_t((*bytes)[i]) << 24) | (std::size_t((*bytes)[i + 1]) << 16) |
                    (std::size_t((*bytes)[i + 2]) << 8) | std::size_t((*bytes)[i + 3]);
    i += 4;
    require(i + n <= bytes->size(), "truncated transcript entry");
    std::string msg(bytes->begin() + static_cast<long>(i), bytes->begin() + static_cast<long>(i + n));
    i += n;
    if (msg.rfind("OPTIONS ", 0) == 0) {
      last_request = MessageKind::kPreflightRequest;
      out.push_back(*last_request);
    } else if (msg.rfind("ATTEST ", 0) == 0) {
      last_request = msg.find("Attest-Secret:") != std::string::npos
                         ? MessageKind::kTrustedSessionRequest
                         : MessageKind::kAttestRequest;
      out.push_back(*last_request);
    } else {
      require(last_request.has_value(), "response before any request");
      out.push_back(*last_request == MessageKind::kPreflightRequest ? MessageKind::kPreflightResponse
                    : *last_request == MessageKind::kAttestRequest  ? MessageKind::kAttestResponse
                                                                    : MessageKind::kTrustedSessionResponse);
    }
  }
  return out;
}

// ---- 2 ----

Outcome one_way_sequence() {
  Loopback lb("c2", HandshakeMode::kOneWay);
  HttpaClient client(lb.client(HandshakeMode::kOneWay));
  auto resp = client.request(as_bytes("ping"));
  require(to_string(resp.body) == "ping", "echo body differs");
  const std::vector<std::string> want = {"Preflight", "AttestReq", "AttestResp", "SessionReq",
                                         "SessionResp"};
  auto from_client = collapse(kinds_from_file(lb.dir / "client_transcript.bin"));
  auto from_server = collapse(kinds_from_file(lb.dir / "server_transcript.bin"));
  require(from_client == want, "client transcript: " + kinds_str(from_client));
  require(from_server == want, "server transcript: " + kinds_str(from_server));
  require(test::read_file((lb.dir / "client_transcript.bin").string()) ==
              test::read_file((lb.dir / "server_transcript.bin").string()),
          "client and server transcripts differ");
  // The server's own view of the wire for that connection.
  const std::vector<std::string> trace_want = {
      "recv PreflightRequest",      "send PreflightResponse",      "recv AttestRequest",
      "send AttestResponse",        "recv TrustedSessionRequest", "send TrustedSessionResponse",
      "recv record",                "send record"};
  auto trace = lb.trace_of(1);
  require(trace == trace_want, "server trace: " + kinds_str(trace));
  return {true, kinds_str(want) + " in client, server and wire trace"};
}

// ---- 3 ----

void corrupt_quote_header(HttpMessage& m) {
  for (auto& h : m.headers) {
    if (h.name == header::kQuote) {
      auto raw = *b64url_decode(h.value);
      raw[raw.size() - 5] ^= 0x40;  // inside the signature
      h.value = b64url_encode(raw);
    }
  }
}

Outcome tampered_client_quote() {
  Loopback lb("c3", HandshakeMode::kMutual);
  HttpaClient client(lb.client(HandshakeMode::kMutual));
  client.set_tamper([](MessageKind k, HttpMessage& m) {
    if (k == MessageKind::kAttestRequest) corrupt_quote_header(m);
  });
  bool rejected = false;
  try {
    client.request(as_bytes("ping"));
  } catch (const HandshakeError& e) {
    rejected = e.failure().reason == FailureReason::kServerRejected;
  }
  require(rejected, "client did not see the server abort");
  auto trace = lb.trace_of(1);
  const std::vector<std::string> want = {"recv PreflightRequest", "send PreflightResponse",
                                         "recv AttestRequest", "send 403", "close"};
  require(trace == want, "server trace: " + kinds_str(trace));
  auto stats = lb.server->stats();
  require(stats.aborted == 1 && stats.established == 0, "server stats disagree");

  // Same again on a raw connection: after the 403 the socket is gone.
  World w(3);
  auto creds = load_credentials((lb.dir / "tcb_credentials.json").string());
  auto roots = load_trust_store((lb.dir / "roots.json").string());
  SystemRng rng;
  HandshakeConfig hc;
  hc.mode = HandshakeMode::kMutual;
  hc.clock = lb.clock;
  hc.rng = std::make_shared<SystemRng>();
  hc.verifier = std::make_shared<LocalQuoteVerifier>(
      Verifier::in_process("CN=Acceptance Verifier", roots, lb.clock, rng));
  hc.tee = SimulatedTee::create(as_bytes("acceptance-client"), creds, roots, rng);
  ClientHandshake hs(hc);
  auto conn = HttpConnection::connect("127.0.0.1", lb.server->port(), std::nullopt);
  auto pre = hs.begin();
  pre.target = "/echo";
  auto step = hs.on_preflight_response(conn->round_trip(pre));
  auto attest = std::get<HttpMessage>(step);
  attest.target = "/echo";
  corrupt_quote_header(attest);
  auto resp = conn->round_trip(attest);
  require(resp.status == 403, "tampered request answered " + std::to_string(resp.status));
  require(!resp.header(header::kQuote) && !resp.header(header::kRandom),
          "403 carried attest response fields");
  bool ended = false;
  try {
    conn->round_trip(pre);
  } catch (const Error& e) {
    ended = e.code() == ErrorCode::kTransport;
  }
  require(ended, "connection still usable after abort");
  for (const auto& t : lb.server->trace()) {
    require(t.what != "send AttestResponse", "an AttestResponse was emitted");
  }
  return {true, "server aborted with 403 before any AttestResponse and closed the connection"};
}

// ---- 4 ----

Outcome prf_vectors() {
  std::ifstream in(test::data_path("vectors/prf_sha256.json"));
  require(in.good(), "missing vectors/prf_sha256.json");
  auto j = nlohmann::json::parse(in);
  require(j.size() >= 5, "fewer than 5 vectors");
  for (const auto& v : j) {
    auto out = prf(hex_decode_or_throw(v.at("secret").get<std::string>()),
                   v.at("label").get<std::string>(),
                   hex_decode_or_throw(v.at("seed").get<std::string>()), v.at("length").get<std::size_t>());
    require(hex_encode(out) == v.at("output").get<std::string>(),
            "mismatch for " + v.at("label").get<std::string>());
  }
  return {true, std::to_string(j.size()) + " HMAC-SHA-256 oracle vectors match"};
}

// ---- 5 ----

Outcome key_block_layout_offsets() {
  std::ifstream in(test::data_path("vectors/prf_sha256.json"));
  auto j = nlohmann::json::parse(in);
  struct Case {
    CipherSuite suite;
    std::size_t key, total, vector;
    HandshakeMode mode;
  };
  for (auto c : {Case{CipherSuite::kAes128GcmSha256, 16, 120, 1, HandshakeMode::kOneWay},
                 Case{CipherSuite::kAes256GcmSha384, 32, 152, 3, HandshakeMode::kMutual},
                 Case{CipherSuite::kChaCha20Poly1305Sha256, 32, 152, 3, HandshakeMode::kMutual}}) {
    auto layout = key_block_layout(c.suite);
    require(layout.mac_secret == 32 && layout.key == c.key && layout.iv == 12, "layout sizes");
    require(layout.total() == c.total, "total for " + std::string(suite_token(c.suite)));
    const auto& v = j.at(c.vector);
    auto secret = hex_decode_or_throw(v.at("secret").get<std::string>());
    auto seed = hex_decode_or_throw(v.at("seed").get<std::string>());
    auto oracle = hex_decode_or_throw(v.at("output").get<std::string>());
    require(oracle.size() == c.total, "oracle length");
    std::vector<PreSessionSecret> secrets(secret.size() / 32);
    for (std::size_t i = 0; i < secrets.size(); ++i) {
      std::copy_n(secret.begin() + static_cast<long>(32 * i), 32, secrets[i].bytes.begin());
    }
    auto kb = derive_key_block(c.mode, secrets, to_array<32>(ByteView(seed).first(32)),
                               to_array<32>(ByteView(seed).subspan(32)), c.suite);
    std::size_t off = 0;
    auto field = [&](const Bytes& got, std::size_t n, const char* name) {
      require(got == Bytes(oracle.begin() + static_cast<long>(off),
                           oracle.begin() + static_cast<long>(off + n)),
              std::string(name) + " at offset " + std::to_string(off));
      off += n;
    };
    field(kb.client_write_mac_secret, 32, "client_write_mac_secret");
    field(kb.server_write_mac_secret, 32, "server_write_mac_secret");
    field(kb.client_write_key, c.key, "client_write_key");
    field(kb.server_write_key, c.key, "server_write_key");
    field(kb.client_write_iv, 12, "client_write_iv");
    field(kb.server_write_iv, 12, "server_write_iv");
    require(off == c.total, "fields do not cover the block");
  }
  return {true, "AES-128 120 bytes, AES-256/ChaCha20 152 bytes, offsets match oracle"};
}

// ---- 6 ----

Outcome fingerprint_and_mutation() {
  World w(6);
  auto quote = w.server_tee->generate_quote().encode();
  auto pubkey = w.server_tee->public_key();
  auto roots = w.pki.quote_roots();
  require(check_quote_bytes(quote, roots, pubkey).verdict.pass(), "untouched quote fails");
  std::mt19937_64 g(6);
  for (int i = 0; i < 100; ++i) {
    Bytes other(pubkey.begin(), pubkey.end());
    other[g() % other.size()] ^= static_cast<std::uint8_t>(1 + g() % 255);
    auto v = check_quote_bytes(quote, roots, other).verdict;
    require(v.reason == FailReason::kFingerprintMismatch,
            "trial " + std::to_string(i) + " gave " + std::string(fail_reason_name(v.reason)));
  }
  std::size_t mutations = 0;
  for (std::size_t pos = 0; pos < quote.size(); ++pos) {
    for (int rep = 0; rep < 2; ++rep) {
      auto m = quote;
      m[pos] ^= static_cast<std::uint8_t>(1 + g() % 255);
      require(!check_quote_bytes(m, roots, pubkey).verdict.pass(),
              "mutation at byte " + std::to_string(pos) + " passed");
      ++mutations;
    }
  }
  return {true, "100/100 FingerprintMismatch; " + std::to_string(mutations) +
                    " single-byte quote mutations all non-Pass"};
}

// ---- 7 ----

Outcome record_faults() {
  std::mt19937_64 g(7);
  SystemRng rng;
  constexpr int kRecords = 10000;
  int closed_runs = 0, false_accepts = 0, blocks = 0;
  for (int block = 0; block < kRecords / 100; ++block, ++blocks) {
    auto suite = kAllCipherSuites[block % 3];
    std::vector<PreSessionSecret> s{PreSessionSecret::generate(rng)};
    auto kb = derive_key_block(HandshakeMode::kOneWay, s, rng.array<32>(), rng.array<32>(), suite);
    SessionId sid{};
    TrustedChannel sender(sid, kb, Role::kClient), receiver(sid, kb, Role::kServer);
    std::vector<Bytes> plain;
    std::vector<RecordFrame> frames;
    for (int i = 0; i < 100; ++i) {
      Bytes m(1 + g() % 64);
      for (auto& b : m) b = static_cast<std::uint8_t>(g());
      plain.push_back(m);
      frames.push_back(sender.seal(m, as_bytes("POST /echo")));
    }
    std::size_t at = g() % 99;
    std::vector<std::size_t> idx(100);
    for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
    switch (block % 4) {
      case 0: {
        auto& ct = frames[at].ciphertext;
        ct[g() % ct.size()] ^= static_cast<std::uint8_t>(1 + g() % 255);
        break;
      }
      case 1:
        frames.insert(frames.begin() + static_cast<long>(at) + 1, frames[at]);
        idx.insert(idx.begin() + static_cast<long>(at) + 1, at);
        break;
      case 2:
        std::swap(frames[at], frames[at + 1]);
        std::swap(idx[at], idx[at + 1]);
        break;
      case 3:
        frames.erase(frames.begin() + static_cast<long>(at));
        idx.erase(idx.begin() + static_cast<long>(at));
        break;
    }
    bool closed = false;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      try {
        auto out = receiver.open(frames[i], as_bytes("POST /echo"));
        if (out != plain[i] || idx[i] != i) ++false_accepts;
      } catch (const Error&) {
        closed = receiver.closed();
        break;
      }
    }
    if (closed) ++closed_runs;
  }
  require(false_accepts == 0, std::to_string(false_accepts) + " false accepts");
  require(closed_runs == blocks, std::to_string(blocks - closed_runs) + " faults went unnoticed");
  return {true, "10000 records, " + std::to_string(blocks) +
                    " injected faults (tamper/replay/reorder/drop), all closed, 0 false accepts"};
}

// ---- 8 ----

Outcome resumption() {
  Loopback lb("c8", HandshakeMode::kOneWay);
  auto cfg = lb.client(HandshakeMode::kOneWay);
  {
    HttpaClient first(cfg, lb.clock);
    auto r = first.request(as_bytes("one"));
    require(r.report["handshake"] == "full", "first request did not do a full handshake");
    require(first.attest_messages_sent() == 2, "first run sent no ATTEST");
  }
  require(lb.server->stats().attest_requests == 2, "server saw no first handshake");
  lb.clock->advance(kDefaultQuoteMaxAge - 1);
  {
    HttpaClient second(cfg, lb.clock);
    auto r = second.request(as_bytes("two"));
    require(to_string(r.body) == "two", "resumed echo differs");
    require(r.report["handshake"] == "resumed", "second invocation did not resume");
    require(second.attest_messages_sent() == 0, "second invocation sent ATTEST");
  }
  require(lb.server->stats().attest_requests == 2, "server received ATTEST on resumption");
  lb.clock->advance(2);
  {
    HttpaClient third(cfg, lb.clock);
    auto r = third.request(as_bytes("three"));
    require(r.report["handshake"] == "full", "expired ticket was reused");
    require(third.attest_messages_sent() == 2, "no full handshake after expiry");
  }
  require(lb.server->stats().attest_requests == 4, "server did not see the new handshake");
  return {true, "resume within max-age sent 0 ATTEST; after expiry a full handshake ran"};
}

// ---- 9 ----

Outcome deny_overrides() {
  IdentityBundle b;
  b.domain = "service.example";
  b.tcb.fill(0x5a);
  b.vendor = "CN=Vendor";
  b.verifier = "CN=Verifier";
  int cases = 0;
  for (int code = 0; code < 81; ++code) {
    std::set<Selector> allowed, denied;
    bool any_deny = false;
    int c = code;
    for (auto kind : kAllIdentityKinds) {
      int state = c % 3;  // 0 allow, 1 deny, 2 absent
      c /= 3;
      Selector sel{kind, *b.value_of(kind)};
      if (state == 0) allowed.insert(sel);
      if (state == 1) {
        denied.insert(sel);
        any_deny = true;
      }
    }
    auto d = evaluate_policy(b, Policy(allowed, denied));
    require(d.accepted == !any_deny, "case " + std::to_string(code) + ": " + d.describe());
    if (any_deny) require(d.denied && d.selector && denied.count(*d.selector), "wrong rejection cause");
    ++cases;
  }
  return {true, std::to_string(cases) + " cases: rejected exactly when a deny matches"};
}

// ---- 10 ----

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  // Reports go to stdout; keep them out of the PASS/FAIL listing.
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, "/dev/null", O_WRONLY, 0);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  require(rc == 0, "cannot start " + args[0]);
  return pid;
}

int wait_exit(pid_t pid) {
  int status = 0;
  ::waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

std::uint16_t wait_port_file(const fs::path& path) {
  for (int i = 0; i < 200; ++i) {
    std::ifstream in(path);
    int port = 0;
    if (in >> port && port > 0) return static_cast<std::uint16_t>(port);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  throw Failed("server did not report a port");
}

Outcome golden_transcripts() {
  const std::string cli = HTTPA_CLI_PATH;
  auto dir = scratch_dir("c10");
  ::setenv("HTTPA_LOG", "warn", 1);
  require(wait_exit(spawn({cli, "keygen", "--out", (dir / "keys").string(), "--seed", "42"})) == 0,
          "keygen failed");
  std::string notes;
  for (std::string mode : {"one-way", "mutual"}) {
    auto name = mode == "one-way" ? std::string("oneway") : mode;
    auto server_file = dir / ("server_" + name + ".bin");
    auto client_file = dir / ("client_" + name + ".bin");
    auto port_file = dir / ("port_" + name);
    auto server = spawn({cli, "server", "--keys", (dir / "keys").string(), "--mode", mode, "--seed",
                         "1", "--transcript", server_file.string(), "--port-file",
                         port_file.string()});
    int client_exit = -1;
    try {
      auto port = wait_port_file(port_file);
      client_exit = wait_exit(spawn({cli, "client", "http://127.0.0.1:" + std::to_string(port) + "/echo",
                                     "--keys", (dir / "keys").string(), "--mode", mode, "--seed", "2",
                                     "--data", "golden", "--transcript", client_file.string(),
                                     "--output", (dir / ("body_" + name)).string()}));
    } catch (...) {
      ::kill(server, SIGTERM);
      wait_exit(server);
      throw;
    }
    ::kill(server, SIGTERM);
    require(wait_exit(server) == 0, "server did not shut down cleanly");
    require(client_exit == 0, mode + " client exited " + std::to_string(client_exit));
    auto client_bytes = test::read_file(client_file.string());
    auto server_bytes = test::read_file(server_file.string());
    require(client_bytes && server_bytes, "transcript files missing");
    auto frozen = test::golden("golden/transcript_" + name + ".bin", *client_bytes);
    require(frozen.has_value(), "no golden file for " + mode);
    require(*client_bytes == *frozen, mode + " client transcript differs from golden");
    require(*server_bytes == *frozen, mode + " server transcript differs from golden");
    notes += (notes.empty() ? "" : ", ") + mode + " " + std::to_string(frozen->size()) + " bytes";
  }
  return {true, "client and server transcripts match golden (" + notes + ")"};
}

}  // namespace
}  // namespace httpa

int main() {
  using namespace httpa;
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "handshake agreement", handshake_agreement},
      {2, "one-way message sequence", one_way_sequence},
      {3, "mutual abort on tampered client quote", tampered_client_quote},
      {4, "prf oracle vectors", prf_vectors},
      {5, "key-block layout", key_block_layout_offsets},
      {6, "fingerprint mismatch and quote mutation", fingerprint_and_mutation},
      {7, "record fault injection", record_faults},
      {8, "session resumption", resumption},
      {9, "deny-overrides enumeration", deny_overrides},
      {10, "golden transcripts", golden_transcripts},
  };
  set_log_level(LogLevel::kError);
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o{false, ""};
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << ": " << o.note
              << std::endl;
    if (!o.pass) ++failed;
  }
  std::error_code ec;
  std::filesystem::remove_all(std::filesystem::temp_directory_path() /
                                  ("httpa-acceptance-" + std::to_string(::getpid())),
                              ec);
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << (criteria.size() - failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
