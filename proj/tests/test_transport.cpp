#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "golden.hpp"
#include "httpa/client.hpp"
#include "httpa/log.hpp"
#include "httpa/server.hpp"
#include "httpa/service.hpp"
#include "support.hpp"

namespace httpa {
namespace {

namespace fs = std::filesystem;
using test::World;

class TempDir {
 public:
  TempDir() {
    char tmpl[] = "/tmp/httpa-transport-XXXXXX";
    path_ = ::mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }
  std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

class Transport : public ::testing::Test {
 protected:
  void SetUp() override {
    set_log_level(LogLevel::kOff);
    keygen({dir.str(), 3, false});
  }

  std::unique_ptr<HttpaServer> start_server(HandshakeMode mode = HandshakeMode::kOneWay) {
    ServerConfig cfg;
    cfg.mode = mode;
    cfg.credentials_path = dir / "tcb_credentials.json";
    cfg.roots_path = dir / "roots.json";
    auto s = std::make_unique<HttpaServer>(cfg, clock);
    s->start();
    return s;
  }

  ClientConfig client_config(const HttpaServer& s, const std::string& path = "/echo") {
    ClientConfig c;
    c.url = "http://127.0.0.1:" + std::to_string(s.port()) + path;
    c.roots_path = dir / "roots.json";
    return c;
  }

  HttpMessage raw(const HttpaServer& s, HttpMessage m) {
    auto conn = HttpConnection::connect("127.0.0.1", s.port(), std::nullopt);
    return conn->round_trip(m);
  }

  TempDir dir;
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(test::kTestEpoch);
};

TEST(Url, Parse) {
  auto u = Url::parse("https://example.test:8443/a/b?q=1");
  EXPECT_EQ(u.scheme, "https");
  EXPECT_EQ(u.host, "example.test");
  EXPECT_EQ(u.port, 8443);
  EXPECT_EQ(u.path, "/a/b?q=1");
  EXPECT_EQ(Url::parse("http://h").port, 80);
  EXPECT_EQ(Url::parse("http://h").path, "/");
  EXPECT_EQ(Url::parse("https://h/").port, 443);
  for (auto bad : {"h:80/x", "ftp://h/", "http://:80/", "http://h:0/", "http://h:99999/",
                   "http://h:8x/"}) {
    EXPECT_THROW(Url::parse(bad), Error) << bad;
  }
}

TEST(Config, ServerFromJson) {
  auto c = ServerConfig::from_json({{"port", 9000},
                                    {"mode", "mutual"},
                                    {"handlers", {"echo"}},
                                    {"credentials", "c.json"},
                                    {"roots", "r.json"},
                                    {"suites", {"TCS_AES_256_GCM_SHA384"}},
                                    {"max_age", 30}});
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.mode, HandshakeMode::kMutual);
  EXPECT_EQ(c.suites, std::vector<CipherSuite>{CipherSuite::kAes256GcmSha384});
  EXPECT_EQ(c.max_age, 30u);
  EXPECT_NO_THROW(c.validate());

  auto bad_config = [](const nlohmann::json& j) {
    try {
      ServerConfig::from_json(j).validate();
      return false;
    } catch (const Error& e) {
      return e.code() == ErrorCode::kBadConfig;
    }
  };
  EXPECT_TRUE(bad_config({{"mode", "sideways"}, {"credentials", "c"}, {"roots", "r"}}));
  EXPECT_TRUE(bad_config({{"mode", "mutual"}, {"credentials", "c"}}));
  EXPECT_TRUE(bad_config({{"credentials", "c"}, {"roots", "r"}, {"handlers", {"nope"}}}));
  EXPECT_TRUE(bad_config({{"credentials", "c"}, {"roots", "r"}, {"suites", {"TCS_NOPE"}}}));
  EXPECT_TRUE(bad_config({{"credentials", "c"}, {"roots", "r"}, {"tls_cert", "x"}}));
  EXPECT_TRUE(bad_config({{"credentials", "c"}, {"roots", "r"}, {"port", "eighty"}}));
  EXPECT_TRUE(bad_config({{"credentials", "c"},
                          {"roots", "r"},
                          {"tls_cert", "x"},
                          {"tls_key", "y"},
                          {"seed", 1}}));
  EXPECT_FALSE(bad_config({{"credentials", "c"},
                           {"roots", "r"},
                           {"tls_cert", "x"},
                           {"tls_key", "y"},
                           {"seed", 1},
                           {"test_mode", true}}));
}

TEST(Config, ClientFromJson) {
  auto c = ClientConfig::from_json({{"url", "http://127.0.0.1:1/x"},
                                    {"roots", "r.json"},
                                    {"verifier_url", "http://127.0.0.1:2/verify"},
                                    {"quote_cache_respect", false}});
  EXPECT_EQ(c.verifier_url, "http://127.0.0.1:2/verify");
  EXPECT_FALSE(c.quote_cache_respect);
  EXPECT_NO_THROW(c.validate());
  c.mode = HandshakeMode::kMutual;
  EXPECT_THROW(c.validate(), Error);
}

TEST_F(Transport, MissingCredentialFileIsAnIoError) {
  ServerConfig cfg;
  cfg.credentials_path = dir / "absent.json";
  cfg.roots_path = dir / "roots.json";
  try {
    HttpaServer s(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST_F(Transport, EchoRoundTripAndSessionReuse) {
  auto server = start_server();
  HttpaClient client(client_config(*server), clock);
  for (int i = 0; i < 5; ++i) {
    auto msg = "message " + std::to_string(i);
    auto r = client.request(as_bytes(msg));
    EXPECT_EQ(to_string(r.body), msg);
    EXPECT_EQ(r.report["handshake"], i == 0 ? "full" : "resumed");
  }
  EXPECT_EQ(client.attest_messages_sent(), 2u);
  EXPECT_EQ(server->stats().established, 1u);
  EXPECT_EQ(server->stats().records, 5u);
}

TEST_F(Transport, StopDropsSessions) {
  auto server = start_server();
  auto cfg = client_config(*server);
  HttpaClient client(cfg, clock);
  client.request(as_bytes("a"));
  EXPECT_EQ(server->sessions().size(), 1u);
  server->stop();
  EXPECT_EQ(server->sessions().size(), 0u);
}

TEST_F(Transport, UnknownSessionFallsBackToFullHandshake) {
  auto server = start_server();
  HttpaClient client(client_config(*server), clock);
  client.request(as_bytes("a"));
  server->sessions().clear();
  auto r = client.request(as_bytes("b"));
  EXPECT_EQ(to_string(r.body), "b");
  EXPECT_EQ(r.report["handshake"], "full");
  EXPECT_EQ(client.attest_messages_sent(), 4u);
}

TEST_F(Transport, NoQuoteCacheMeansEveryRequestAttests) {
  auto server = start_server();
  auto cfg = client_config(*server);
  cfg.quote_cache_respect = false;
  HttpaClient client(cfg, clock);
  client.request(as_bytes("a"));
  client.request(as_bytes("b"));
  EXPECT_EQ(client.attest_messages_sent(), 4u);
}

TEST_F(Transport, StatusCodesOutsideTheHandshake) {
  auto server = start_server();
  // Not HTTPA at all.
  EXPECT_EQ(raw(*server, HttpMessage::request("GET", "/echo")).status, 404);
  // Preflight for a path no handler owns.
  auto pre = HttpMessage::request("OPTIONS", "/nowhere");
  pre.set_header("Access-Control-Request-Method", "ATTEST");
  EXPECT_EQ(raw(*server, pre).status, 404);
  // ATTEST without a preflight on this connection.
  AttestRequest ar;
  ar.random.fill(1);
  ar.cipher_suites = {CipherSuiteId(CipherSuite::kAes128GcmSha256)};
  auto attest = encode_message(ar);
  attest.target = "/echo";
  EXPECT_EQ(raw(*server, attest).status, 400);
  // Record for an unknown session.
  auto rec = HttpMessage::request("POST", "/echo");
  rec.set_header(header::kContentType, std::string(kRecordContentType));
  SessionId sid{};
  sid.fill(9);
  rec.set_header(header::kSessionId, b64url_encode(sid));
  rec.body = Bytes(40, 0);
  EXPECT_EQ(raw(*server, rec).status, 428);
  // Record without a session id.
  auto norec = HttpMessage::request("POST", "/echo");
  norec.set_header(header::kContentType, std::string(kRecordContentType));
  EXPECT_EQ(raw(*server, norec).status, 400);
}

TEST_F(Transport, GarbledRecordClosesTheSession) {
  auto server = start_server();
  HttpaClient client(client_config(*server), clock);
  auto first = client.request(as_bytes("a"));
  auto sid = first.report["session_id"].get<std::string>();
  auto rec = HttpMessage::request("POST", "/echo");
  rec.set_header(header::kContentType, std::string(kRecordContentType));
  rec.set_header(header::kSessionId, sid);
  rec.body = Bytes(8 + 16 + 4, 0x33);
  rec.body[7] = 1;  // next expected sequence number, bogus ciphertext
  EXPECT_EQ(raw(*server, rec).status, 400);
  EXPECT_EQ(server->sessions().size(), 0u);
  // The client notices the server lost the session and starts over.
  auto again = client.request(as_bytes("b"));
  EXPECT_EQ(again.report["handshake"], "full");
}

TEST_F(Transport, ConcurrentClients) {
  auto server = start_server();
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      auto cfg = client_config(*server, t % 2 ? "/upper" : "/echo");
      HttpaClient client(cfg, clock);
      for (int i = 0; i < 5; ++i) {
        auto msg = "t" + std::to_string(t) + "-" + std::to_string(i);
        auto r = client.request(as_bytes(msg));
        auto want = msg;
        if (t % 2) for (auto& c : want) c = static_cast<char>(std::toupper(c));
        if (to_string(r.body) == want) ++ok;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 40);
  EXPECT_EQ(server->stats().established, 8u);
}

TEST_F(Transport, MutualLoopback) {
  auto server = start_server(HandshakeMode::kMutual);
  auto cfg = client_config(*server);
  cfg.mode = HandshakeMode::kMutual;
  cfg.credentials_path = dir / "tcb_credentials.json";
  HttpaClient client(cfg, clock);
  auto r = client.request(as_bytes("both ways"));
  EXPECT_EQ(to_string(r.body), "both ways");
  EXPECT_EQ(r.report["mode"], "mutual");
  ASSERT_TRUE(client.last_transcript());
  EXPECT_EQ(client.last_transcript()->kinds().size(), 6u);
}

TEST_F(Transport, ServerPolicyRejectsClient) {
  auto policy_path = dir / "server_policy.json";
  {
    std::ofstream out(policy_path);
    out << R"({"denied":[{"kind":"vendor","value":"CN=HTTPA Demo Vendor,O=Demo Vendor"}]})";
  }
  ServerConfig scfg;
  scfg.mode = HandshakeMode::kMutual;
  scfg.credentials_path = dir / "tcb_credentials.json";
  scfg.roots_path = dir / "roots.json";
  scfg.policy_path = policy_path;
  HttpaServer server(scfg, clock);
  server.start();
  auto cfg = client_config(server);
  cfg.mode = HandshakeMode::kMutual;
  cfg.credentials_path = dir / "tcb_credentials.json";
  HttpaClient client(cfg, clock);
  try {
    client.request(as_bytes("x"));
    FAIL();
  } catch (const HandshakeError& e) {
    EXPECT_EQ(e.failure().reason, FailureReason::kServerRejected);
  }
  EXPECT_EQ(server.stats().aborted, 1u);
}

TEST_F(Transport, VerifierServiceWithGoldenQuote) {
  World w(1);
  save_trust_store(dir / "w_roots.json", w.pki.quote_roots());
  save_credentials(dir / "w_verifier.json", w.pki.verifier);
  VerifierServiceConfig vc;
  vc.roots_path = dir / "w_roots.json";
  vc.credentials_path = dir / "w_verifier.json";
  VerifierService svc(vc);
  svc.start();

  auto frozen = test::read_file(test::data_path("golden/quote.bin"));
  ASSERT_TRUE(frozen);
  RemoteQuoteVerifier remote(Url::parse("http://127.0.0.1:" + std::to_string(svc.port()) + "/verify"),
                             std::nullopt);
  auto rep = remote.verify(*frozen, w.server_tee->public_key());
  EXPECT_TRUE(rep.verdict.pass()) << rep.verdict.detail;
  EXPECT_TRUE(rep.authentic(w.pki.verifier_roots()));
  EXPECT_EQ(rep.bundle.verifier, std::string(kDemoVerifier));

  auto wrong = w.client_tee->public_key();
  EXPECT_EQ(remote.verify(*frozen, wrong).verdict.reason, FailReason::kFingerprintMismatch);

  auto conn = HttpConnection::connect("127.0.0.1", svc.port(), std::nullopt);
  auto garbage = HttpMessage::request("POST", "/verify");
  garbage.body = to_bytes("garbage");
  EXPECT_EQ(conn->round_trip(garbage).status, 400);
  EXPECT_EQ(conn->round_trip(HttpMessage::request("POST", "/other")).status, 404);
  EXPECT_EQ(conn->round_trip(HttpMessage::request("GET", "/verify")).status, 405);
}

TEST_F(Transport, MalformedHttpGets400) {
  auto server = start_server();
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  ASSERT_GE(fd, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(server->port());
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  std::string junk = "THIS IS NOT HTTP\r\n\r\n";
  ASSERT_EQ(::send(fd, junk.data(), junk.size(), 0), static_cast<ssize_t>(junk.size()));
  char buf[256] = {};
  auto n = ::recv(fd, buf, sizeof buf - 1, 0);
  ::close(fd);
  ASSERT_GT(n, 0);
  EXPECT_EQ(std::string(buf).rfind("HTTP/1.1 400", 0), 0u) << buf;
}

TEST_F(Transport, BindFailure) {
  auto server = start_server();
  ServerConfig cfg;
  cfg.credentials_path = dir / "tcb_credentials.json";
  cfg.roots_path = dir / "roots.json";
  cfg.port = server->port();
  HttpaServer second(cfg);
  try {
    second.start();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBindFailure);
  }
}

}  // namespace
}  // namespace httpa
