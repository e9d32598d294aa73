#include "httpa/net.hpp"

#include <sys/socket.h>
#include <sys/time.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/ssl.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <charconv>
#include <list>

#include <openssl/ssl.h>
#include <openssl/x509.h>

#include "httpa/log.hpp"

namespace httpa {

namespace beast = boost::beast;
namespace http = beast::http;
namespace asio = boost::asio;
namespace ssl = asio::ssl;
using tcp = asio::ip::tcp;
using Body = http::vector_body<std::uint8_t>;

Url Url::parse(std::string_view url) {
  Url u;
  auto sep = url.find("://");
  if (sep == std::string_view::npos) throw Error(ErrorCode::kBadConfig, "URL without scheme");
  u.scheme = std::string(url.substr(0, sep));
  if (u.scheme != "http" && u.scheme != "https") {
    throw Error(ErrorCode::kBadConfig, "URL scheme must be http or https");
  }
  std::string rest(url.substr(sep + 3));
  auto slash = rest.find('/');
  std::string_view authority = std::string_view(rest).substr(0, slash);
  u.path = slash == std::string::npos ? "/" : rest.substr(slash);
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    auto port_str = authority.substr(colon + 1);
    unsigned port = 0;
    auto [p, ec] = std::from_chars(port_str.data(), port_str.data() + port_str.size(), port);
    if (ec != std::errc{} || p != port_str.data() + port_str.size() || port == 0 || port > 65535) {
      throw Error(ErrorCode::kBadConfig, "bad port in URL");
    }
    u.port = static_cast<std::uint16_t>(port);
    authority = authority.substr(0, colon);
  } else {
    u.port = u.scheme == "https" ? 443 : 80;
  }
  if (authority.empty()) throw Error(ErrorCode::kBadConfig, "URL without host");
  u.host = std::string(authority);
  return u;
}

std::string Url::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

namespace {

void set_socket_timeouts(int fd, std::chrono::seconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count());
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

template <class Fields>
std::vector<Header> headers_from(const Fields& fields) {
  std::vector<Header> out;
  for (const auto& f : fields) {
    out.push_back({std::string(f.name_string()), std::string(f.value())});
  }
  return out;
}

bool wants_close(const HttpMessage& m) {
  auto c = m.header("Connection");
  return c && (*c == "close" || *c == "Close");
}

std::optional<std::string> peer_cn(SSL* ssl) {
  X509* cert = SSL_get_peer_certificate(ssl);
  if (!cert) return std::nullopt;
  char buf[256] = {};
  int n = X509_NAME_get_text_by_NID(X509_get_subject_name(cert), NID_commonName, buf, sizeof(buf));
  X509_free(cert);
  if (n <= 0) return std::nullopt;
  return std::string(buf, static_cast<std::size_t>(n));
}

template <class Stream>
HttpMessage exchange(Stream& stream, beast::flat_buffer& buffer, const HttpMessage& msg,
                     const std::string& host, bool& open) {
  http::request<Body> req;
  req.version(11);
  req.method_string(msg.method);
  req.target(msg.target);
  req.set(http::field::host, host);
  for (const auto& h : msg.headers) req.insert(h.name, h.value);
  req.body() = msg.body;
  req.prepare_payload();
  try {
    http::write(stream, req);
    http::response_parser<Body> parser;
    parser.body_limit(kMaxHttpBody);
    http::read(stream, buffer, parser);
    auto res = parser.release();
    if (!res.keep_alive()) open = false;
    auto out = HttpMessage::response(static_cast<int>(res.result_int()));
    out.headers = headers_from(res);
    out.body = std::move(res.body());
    return out;
  } catch (const boost::system::system_error& e) {
    open = false;
    throw Error(ErrorCode::kTransport, e.what());
  }
}

class PlainConnection final : public HttpConnection {
 public:
  PlainConnection(const std::string& host, std::uint16_t port, std::chrono::seconds timeout)
      : host_(host), socket_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(socket_, resolver.resolve(host, std::to_string(port)));
    set_socket_timeouts(socket_.native_handle(), timeout);
  }
  HttpMessage round_trip(const HttpMessage& msg) override {
    if (!open_) throw Error(ErrorCode::kTransport, "connection closed by peer");
    return exchange(socket_, buffer_, msg, host_, open_);
  }
  std::optional<std::string> peer_common_name() const override { return std::nullopt; }
  bool open() const override { return open_; }

 private:
  std::string host_;
  asio::io_context ioc_;
  tcp::socket socket_;
  beast::flat_buffer buffer_;
  bool open_ = true;
};

class TlsConnection final : public HttpConnection {
 public:
  TlsConnection(const std::string& host, std::uint16_t port, const TlsClientOptions& tls,
                std::chrono::seconds timeout)
      : host_(host), ctx_(make_context(tls)), stream_(ioc_, ctx_) {
    tcp::resolver resolver(ioc_);
    asio::connect(stream_.next_layer(), resolver.resolve(host, std::to_string(port)));
    set_socket_timeouts(stream_.next_layer().native_handle(), timeout);
    SSL_set_tlsext_host_name(stream_.native_handle(), host.c_str());
    if (tls.ca_path) stream_.set_verify_callback(ssl::host_name_verification(host));
    stream_.handshake(ssl::stream_base::client);
    if (tls.ca_path) cn_ = peer_cn(stream_.native_handle());
  }
  HttpMessage round_trip(const HttpMessage& msg) override {
    if (!open_) throw Error(ErrorCode::kTransport, "connection closed by peer");
    return exchange(stream_, buffer_, msg, host_, open_);
  }
  std::optional<std::string> peer_common_name() const override { return cn_; }
  bool open() const override { return open_; }

 private:
  static ssl::context make_context(const TlsClientOptions& tls) {
    ssl::context ctx(ssl::context::tls_client);
    if (tls.ca_path) {
      ctx.load_verify_file(*tls.ca_path);
      ctx.set_verify_mode(ssl::verify_peer);
    } else {
      ctx.set_verify_mode(ssl::verify_none);
    }
    return ctx;
  }

  std::string host_;
  asio::io_context ioc_;
  ssl::context ctx_;
  ssl::stream<tcp::socket> stream_;
  beast::flat_buffer buffer_;
  bool open_ = true;
  std::optional<std::string> cn_;
};

}  // namespace

std::unique_ptr<HttpConnection> HttpConnection::connect(const std::string& host,
                                                        std::uint16_t port,
                                                        const std::optional<TlsClientOptions>& tls,
                                                        std::chrono::seconds timeout) {
  try {
    if (tls) return std::make_unique<TlsConnection>(host, port, *tls, timeout);
    return std::make_unique<PlainConnection>(host, port, timeout);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::kTransport, host + ":" + std::to_string(port) + ": " + e.what());
  }
}

// ---- server ----

namespace {

struct ConnSlot {
  std::mutex mu;
  int fd = -1;
  bool closed = false;
  std::atomic<bool> done{false};

  void shutdown() {
    std::lock_guard lock(mu);
    if (!closed && fd >= 0) ::shutdown(fd, SHUT_RDWR);
  }
};

template <class Stream>
void serve_requests(Stream& stream, const RequestHandler& handler) {
  beast::flat_buffer buffer;
  for (;;) {
    http::request_parser<Body> parser;
    parser.body_limit(kMaxHttpBody);
    boost::system::error_code ec;
    http::read(stream, buffer, parser, ec);
    if (ec) {
      // Parse errors get a 400; socket errors just end the connection.
      if (ec != http::error::end_of_stream && std::string_view(ec.category().name()) == "beast.http") {
        http::response<Body> bad{http::status::bad_request, 11};
        bad.keep_alive(false);
        bad.prepare_payload();
        http::write(stream, bad, ec);
      }
      return;
    }
    auto req = parser.release();
    auto in = HttpMessage::request(std::string(req.method_string()), std::string(req.target()));
    in.headers = headers_from(req);
    in.body = std::move(req.body());

    HttpMessage out;
    try {
      out = handler(in);
    } catch (const std::exception& e) {
      log_event(LogLevel::kError, "handler_exception", {{"what", e.what()}});
      out = HttpMessage::response(500);
      out.set_header("Connection", "close");
    }
    bool close = wants_close(out) || !req.keep_alive();
    http::response<Body> res;
    res.version(11);
    res.result(static_cast<unsigned>(out.status));
    for (const auto& h : out.headers) {
      if (!beast::iequals(h.name, "Connection")) res.insert(h.name, h.value);
    }
    res.body() = std::move(out.body);
    res.keep_alive(!close);
    res.prepare_payload();
    http::write(stream, res, ec);
    if (ec || close) return;
  }
}

}  // namespace

struct HttpListener::Impl {
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::optional<ssl::context> tls;
  ConnectionFactory factory;
  std::thread accept_thread;
  std::mutex mu;
  std::list<std::pair<std::thread, std::shared_ptr<ConnSlot>>> conns;
  std::atomic<bool> stopping{false};
  bool started = false;

  void reap() {
    for (auto it = conns.begin(); it != conns.end();) {
      if (it->second->done) {
        it->first.join();
        it = conns.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve(tcp::socket socket, const std::shared_ptr<ConnSlot>& slot) {
    set_socket_timeouts(socket.native_handle(), std::chrono::seconds(300));
    try {
      auto handler = factory();
      if (tls) {
        ssl::stream<tcp::socket> stream(std::move(socket), *tls);
        boost::system::error_code ec;
        stream.handshake(ssl::stream_base::server, ec);
        if (!ec) {
          serve_requests(stream, handler);
          stream.shutdown(ec);
        }
        std::lock_guard lock(slot->mu);
        slot->closed = true;
        stream.next_layer().close(ec);
      } else {
        serve_requests(socket, handler);
        boost::system::error_code ec;
        std::lock_guard lock(slot->mu);
        slot->closed = true;
        socket.shutdown(tcp::socket::shutdown_both, ec);
        socket.close(ec);
      }
    } catch (const std::exception& e) {
      log_event(LogLevel::kWarn, "connection_error", {{"what", e.what()}});
      std::lock_guard lock(slot->mu);
      slot->closed = true;
    }
    slot->done = true;
  }

  void accept_loop() {
    while (!stopping) {
      tcp::socket socket(ioc);
      boost::system::error_code ec;
      acceptor.accept(socket, ec);
      if (ec) {
        if (stopping) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        continue;
      }
      std::lock_guard lock(mu);
      if (stopping) break;
      reap();
      auto slot = std::make_shared<ConnSlot>();
      slot->fd = socket.native_handle();
      conns.emplace_back(
          std::thread([this, s = std::move(socket), slot]() mutable { serve(std::move(s), slot); }),
          slot);
    }
  }
};

HttpListener::HttpListener(const std::string& host, std::uint16_t port,
                           const std::optional<TlsServerOptions>& tls, ConnectionFactory factory)
    : impl_(std::make_unique<Impl>()) {
  impl_->factory = std::move(factory);
  if (tls) {
    try {
      impl_->tls.emplace(ssl::context::tls_server);
      impl_->tls->use_certificate_chain_file(tls->cert_path);
      impl_->tls->use_private_key_file(tls->key_path, ssl::context::pem);
    } catch (const boost::system::system_error& e) {
      throw Error(ErrorCode::kBadConfig, std::string("TLS material: ") + e.what());
    }
  }
  try {
    tcp::resolver resolver(impl_->ioc);
    auto endpoint = resolver.resolve(host, std::to_string(port)).begin()->endpoint();
    impl_->acceptor.open(endpoint.protocol());
    impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
    impl_->acceptor.bind(endpoint);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::kBindFailure, host + ":" + std::to_string(port) + ": " + e.what());
  }
}

HttpListener::~HttpListener() { stop(); }

std::uint16_t HttpListener::port() const { return impl_->acceptor.local_endpoint().port(); }

void HttpListener::start() {
  if (impl_->started) return;
  impl_->started = true;
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void HttpListener::stop() {
  if (impl_->stopping.exchange(true)) return;
  ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
  std::list<std::pair<std::thread, std::shared_ptr<ConnSlot>>> conns;
  {
    std::lock_guard lock(impl_->mu);
    conns.swap(impl_->conns);
  }
  for (auto& [t, slot] : conns) slot->shutdown();
  for (auto& [t, slot] : conns) t.join();
}

}  // namespace httpa
