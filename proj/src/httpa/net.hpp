#pragma once

// Blocking HTTP/1.1 transport over plain TCP or TLS. Methods are passed
// through verbatim so ATTEST needs no special casing.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httpa/wire.hpp"

namespace httpa {

inline constexpr std::size_t kMaxHttpBody = 17u * 1024u * 1024u;

struct Url {
  std::string scheme;  // http or https
  std::string host;
  std::uint16_t port = 0;
  std::string path = "/";

  // Throws BadConfig.
  static Url parse(std::string_view url);
  std::string origin() const;
};

struct TlsClientOptions {
  // PEM bundle used to verify the server. Without it the certificate is not
  // checked and no domain identity is reported.
  std::optional<std::string> ca_path;
};

struct TlsServerOptions {
  std::string cert_path;
  std::string key_path;
};

// One keep-alive client connection. Single owner.
class HttpConnection {
 public:
  // Throws Transport.
  static std::unique_ptr<HttpConnection> connect(const std::string& host, std::uint16_t port,
                                                 const std::optional<TlsClientOptions>& tls,
                                                 std::chrono::seconds timeout = std::chrono::seconds(30));
  virtual ~HttpConnection() = default;

  // Sends msg with msg.target as the request target. Throws Transport,
  // including when the server closes the connection.
  virtual HttpMessage round_trip(const HttpMessage& msg) = 0;
  // Common name of a verified TLS peer certificate.
  virtual std::optional<std::string> peer_common_name() const = 0;
  virtual bool open() const = 0;
};

// Per-connection request handler. A response carrying "Connection: close"
// is written and then the connection is closed.
using RequestHandler = std::function<HttpMessage(const HttpMessage&)>;
using ConnectionFactory = std::function<RequestHandler()>;

// Accepts on a background thread; one thread per connection.
class HttpListener {
 public:
  // Throws BindFailure or BadConfig (unreadable TLS material).
  HttpListener(const std::string& host, std::uint16_t port,
               const std::optional<TlsServerOptions>& tls, ConnectionFactory factory);
  ~HttpListener();
  HttpListener(const HttpListener&) = delete;
  HttpListener& operator=(const HttpListener&) = delete;

  std::uint16_t port() const;
  void start();
  // Closes the listening socket and every open connection, then joins.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace httpa
