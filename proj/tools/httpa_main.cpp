// httpa: keygen, server, client and verifier front end over the C API.

#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httpa/httpa.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct Buffer {
  httpa_buffer b{nullptr, 0};
  ~Buffer() { httpa_buffer_free(&b); }
  std::string str() const { return std::string(reinterpret_cast<const char*>(b.data), b.len); }
};

int fail(httpa_status s, const std::string& context) {
  std::cerr << "httpa " << context << ": " << httpa_status_string(s) << ": " << httpa_last_error()
            << "\n";
  return static_cast<int>(s);
}

int usage_error(const std::string& what) {
  std::cerr << "httpa: " << what << "\n";
  return HTTPA_ERR_CONFIG;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_port_file(const std::string& path, uint16_t port) {
  auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    out << port << "\n";
  }
  std::filesystem::rename(tmp, path);
}

// Blocks SIGINT/SIGTERM in every thread and waits for one of them.
struct SignalWaiter {
  sigset_t set;
  SignalWaiter() {
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
  }
  int wait() {
    int sig = 0;
    sigwait(&set, &sig);
    return sig;
  }
};

bool printable(const std::string& s) {
  for (unsigned char c : s) {
    if (c < 0x20 && c != '\n' && c != '\r' && c != '\t') return false;
    if (c >= 0x80) return false;
  }
  return true;
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct Common {
  std::optional<std::string> config;
  std::optional<std::string> keys;
  std::optional<std::string> mode;
  std::optional<std::string> roots;
  std::optional<std::string> policy;
  std::vector<std::string> suites;
  std::optional<uint64_t> seed;
  std::optional<int64_t> now;
  bool test_mode = false;
  bool tls = false;
  std::optional<std::string> transcript;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its keys");
    app->add_option("--keys", keys, "directory written by `httpa keygen`");
    app->add_option("--mode", mode, "one-way or mutual")->check(CLI::IsMember({"one-way", "mutual"}));
    app->add_option("--roots", roots, "trust roots JSON");
    app->add_option("--policy", policy, "identity policy JSON");
    app->add_option("--suite", suites, "cipher suite token, repeatable, in preference order");
    app->add_option("--seed", seed, "deterministic RNG seed (test mode)");
    app->add_option("--now", now, "fixed clock, unix seconds, with --seed");
    app->add_flag("--test-mode", test_mode, "allow --seed together with --tls");
    app->add_flag("--tls", tls, "use TLS");
    app->add_option("--transcript", transcript, "write the handshake transcript here");
  }

  void apply(json& j) const {
    if (mode) j["mode"] = *mode;
    if (roots) j["roots"] = *roots;
    if (policy) j["policy"] = *policy;
    if (!suites.empty()) j["suites"] = suites;
    if (seed) j["seed"] = *seed;
    if (now) j["now"] = *now;
    if (test_mode) j["test_mode"] = true;
    if (transcript) j["transcript"] = *transcript;
  }
};

int run_keygen(const std::string& out, std::optional<uint64_t> seed, bool tls) {
  auto s = httpa_keygen(out.c_str(), seed.has_value(), seed.value_or(0), tls);
  if (s != HTTPA_OK) return fail(s, "keygen");
  std::cout << json{{"out", out}, {"seeded", seed.has_value()}, {"tls", tls}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HTTPA attested HTTP: keygen, server, client, verifier"};
  app.require_subcommand(1);
  std::optional<std::string> log_level;
  app.add_option("--log", log_level, "log level (overrides HTTPA_LOG)");

  // keygen
  auto* kg = app.add_subcommand("keygen", "write demo roots and credentials");
  std::string kg_out = "keys";
  std::optional<uint64_t> kg_seed;
  bool kg_tls = false;
  kg->add_option("--out", kg_out, "output directory");
  kg->add_option("--seed", kg_seed, "deterministic key material");
  kg->add_flag("--tls", kg_tls, "also write a self-signed localhost certificate");

  // server
  auto* sv = app.add_subcommand("server", "serve attested demo handlers until SIGINT/SIGTERM");
  Common sc;
  sc.add(sv);
  std::optional<std::string> sv_host, sv_credentials, sv_cert, sv_key, sv_port_file;
  std::optional<uint16_t> sv_port;
  std::optional<uint32_t> sv_max_age;
  std::vector<std::string> sv_handlers;
  sv->add_option("--host", sv_host, "listen address");
  sv->add_option("--port", sv_port, "listen port, 0 for any");
  sv->add_option("--credentials", sv_credentials, "TCB vendor credentials JSON");
  sv->add_option("--handler", sv_handlers, "demo handler: echo, upper, sha256 (repeatable)");
  sv->add_option("--max-age", sv_max_age, "quote and session max-age, seconds");
  sv->add_option("--tls-cert", sv_cert, "PEM certificate (with --tls)");
  sv->add_option("--tls-key", sv_key, "PEM private key (with --tls)");
  sv->add_option("--port-file", sv_port_file, "write the bound port here once listening");

  // client
  auto* cl = app.add_subcommand("client", "attest a server and send one protected request");
  Common cc;
  cc.add(cl);
  std::optional<std::string> cl_url, cl_credentials, cl_verifier, cl_cache, cl_ca, cl_service,
      cl_data, cl_data_file, cl_output;
  std::string cl_method = "POST";
  bool cl_no_cache = false;
  cl->add_option("url", cl_url, "server URL, http:// or https://");
  cl->add_option("--credentials", cl_credentials, "client TEE vendor credentials (mutual)");
  cl->add_option("--verifier-url", cl_verifier, "remote attestation service; default in-process");
  cl->add_option("--session-cache", cl_cache, "session ticket file for resumption");
  cl->add_option("--tls-ca", cl_ca, "PEM bundle to verify the server certificate");
  cl->add_option("--service", cl_service, "X-Service routing header");
  cl->add_option("--data", cl_data, "request body");
  cl->add_option("--data-file", cl_data_file, "request body from file, - for stdin");
  cl->add_option("--method", cl_method, "record request method");
  cl->add_option("--output", cl_output, "write the response body here instead of the report");
  cl->add_flag("--no-quote-cache", cl_no_cache, "never resume sessions");

  // verifier
  auto* vf = app.add_subcommand("verifier", "serve POST /verify until SIGINT/SIGTERM");
  std::optional<std::string> vf_config, vf_keys, vf_host, vf_roots, vf_credentials, vf_tee,
      vf_cert, vf_key, vf_port_file;
  std::optional<uint16_t> vf_port;
  std::optional<uint64_t> vf_seed;
  bool vf_tls = false;
  vf->add_option("--config", vf_config, "JSON config file; flags override its keys");
  vf->add_option("--keys", vf_keys, "directory written by `httpa keygen`");
  vf->add_option("--host", vf_host, "listen address");
  vf->add_option("--port", vf_port, "listen port, 0 for any");
  vf->add_option("--roots", vf_roots, "vendor roots for quotes");
  vf->add_option("--credentials", vf_credentials, "verifier signing credentials");
  vf->add_option("--tee-credentials", vf_tee, "run inside a TEE using these vendor credentials");
  vf->add_option("--seed", vf_seed, "deterministic RNG and clock");
  vf->add_flag("--tls", vf_tls, "use TLS");
  vf->add_option("--tls-cert", vf_cert, "PEM certificate");
  vf->add_option("--tls-key", vf_key, "PEM private key");
  vf->add_option("--port-file", vf_port_file, "write the bound port here once listening");

  CLI11_PARSE(app, argc, argv);

  if (log_level) {
    if (httpa_set_log_level(log_level->c_str()) != HTTPA_OK) return usage_error("bad --log level");
  }

  try {
    if (*kg) return run_keygen(kg_out, kg_seed, kg_tls);

    if (*sv) {
      json j = sc.config ? load_config_file(*sc.config) : json::object();
      if (sc.keys) {
        j["credentials"] = *sc.keys + "/tcb_credentials.json";
        j["roots"] = *sc.keys + "/roots.json";
        if (sc.tls) {
          j["tls_cert"] = *sc.keys + "/tls_cert.pem";
          j["tls_key"] = *sc.keys + "/tls_key.pem";
        }
      }
      sc.apply(j);
      if (sv_host) j["host"] = *sv_host;
      if (sv_port) j["port"] = *sv_port;
      if (sv_credentials) j["credentials"] = *sv_credentials;
      if (!sv_handlers.empty()) j["handlers"] = sv_handlers;
      if (sv_max_age) j["max_age"] = *sv_max_age;
      if (sv_cert) j["tls_cert"] = *sv_cert;
      if (sv_key) j["tls_key"] = *sv_key;
      if (sc.tls && (!j.contains("tls_cert") || !j.contains("tls_key"))) {
        return usage_error("--tls needs --tls-cert and --tls-key (or --keys)");
      }
      if (!sc.tls && (sv_cert || sv_key)) return usage_error("--tls-cert/--tls-key need --tls");

      SignalWaiter signals;
      httpa_server* server = nullptr;
      auto s = httpa_server_create(j.dump().c_str(), &server);
      if (s != HTTPA_OK) return fail(s, "server");
      s = httpa_server_start(server);
      if (s != HTTPA_OK) {
        httpa_server_destroy(server);
        return fail(s, "server");
      }
      if (sv_port_file) write_port_file(*sv_port_file, httpa_server_port(server));
      signals.wait();
      httpa_server_stop(server);
      httpa_server_destroy(server);
      return 0;
    }

    if (*vf) {
      json j = vf_config ? load_config_file(*vf_config) : json::object();
      if (vf_keys) {
        j["roots"] = *vf_keys + "/roots.json";
        j["credentials"] = *vf_keys + "/verifier_credentials.json";
        if (vf_tls) {
          j["tls_cert"] = *vf_keys + "/tls_cert.pem";
          j["tls_key"] = *vf_keys + "/tls_key.pem";
        }
      }
      if (vf_host) j["host"] = *vf_host;
      if (vf_port) j["port"] = *vf_port;
      if (vf_roots) j["roots"] = *vf_roots;
      if (vf_credentials) j["credentials"] = *vf_credentials;
      if (vf_tee) j["tee_credentials"] = *vf_tee;
      if (vf_seed) j["seed"] = *vf_seed;
      if (vf_cert) j["tls_cert"] = *vf_cert;
      if (vf_key) j["tls_key"] = *vf_key;
      if (vf_tls && (!j.contains("tls_cert") || !j.contains("tls_key"))) {
        return usage_error("--tls needs --tls-cert and --tls-key (or --keys)");
      }

      SignalWaiter signals;
      httpa_verifier* verifier = nullptr;
      auto s = httpa_verifier_create(j.dump().c_str(), &verifier);
      if (s != HTTPA_OK) return fail(s, "verifier");
      s = httpa_verifier_start(verifier);
      if (s != HTTPA_OK) {
        httpa_verifier_destroy(verifier);
        return fail(s, "verifier");
      }
      if (vf_port_file) write_port_file(*vf_port_file, httpa_verifier_port(verifier));
      signals.wait();
      httpa_verifier_stop(verifier);
      httpa_verifier_destroy(verifier);
      return 0;
    }

    // client
    json j = cc.config ? load_config_file(*cc.config) : json::object();
    if (cc.keys) {
      j["roots"] = *cc.keys + "/roots.json";
      if (cc.mode && *cc.mode == "mutual") j["credentials"] = *cc.keys + "/tcb_credentials.json";
      if (cc.tls && std::filesystem::exists(*cc.keys + "/tls_cert.pem")) {
        j["tls_ca"] = *cc.keys + "/tls_cert.pem";
      }
    }
    cc.apply(j);
    if (cl_url) j["url"] = *cl_url;
    if (!j.contains("url")) return usage_error("client needs a URL");
    if (cc.tls) {
      auto url = j["url"].get<std::string>();
      if (url.rfind("http://", 0) == 0) j["url"] = "https://" + url.substr(7);
    }
    if (cl_credentials) j["credentials"] = *cl_credentials;
    if (cl_verifier) j["verifier_url"] = *cl_verifier;
    if (cl_cache) j["session_cache"] = *cl_cache;
    if (cl_ca) j["tls_ca"] = *cl_ca;
    if (cl_service) j["service"] = *cl_service;
    if (cl_no_cache) j["quote_cache_respect"] = false;

    std::string body;
    if (cl_data && cl_data_file) return usage_error("use one of --data and --data-file");
    if (cl_data) body = *cl_data;
    if (cl_data_file) {
      if (*cl_data_file == "-") {
        body = read_all(std::cin);
      } else {
        std::ifstream in(*cl_data_file, std::ios::binary);
        if (!in) return usage_error("cannot read " + *cl_data_file);
        body = read_all(in);
      }
    }

    httpa_client* client = nullptr;
    auto s = httpa_client_create(j.dump().c_str(), &client);
    if (s != HTTPA_OK) return fail(s, "client");
    Buffer response;
    s = httpa_client_request(client, cl_method.c_str(),
                             reinterpret_cast<const uint8_t*>(body.data()), body.size(), &response.b);
    Buffer report_buf;
    httpa_client_report(client, &report_buf.b);
    auto attest_count = httpa_client_attest_count(client);
    httpa_client_destroy(client);

    json report = json::parse(report_buf.str().empty() ? "{}" : report_buf.str());
    report["attest_messages"] = attest_count;
    report["exit_code"] = static_cast<int>(s);
    if (s != HTTPA_OK) {
      std::cout << report.dump(2) << "\n";
      return fail(s, "client");
    }
    auto text = response.str();
    if (cl_output) {
      std::ofstream out(*cl_output, std::ios::binary | std::ios::trunc);
      out << text;
    } else if (printable(text)) {
      report["response"] = text;
    } else {
      static const char* digits = "0123456789abcdef";
      std::string hex;
      for (unsigned char c : text) {
        hex += digits[c >> 4];
        hex += digits[c & 15];
      }
      report["response_hex"] = hex;
    }
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
}
