#include "httpa/wire.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <limits>

namespace httpa {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           auto lower = [](char c) {
             return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
           };
           return lower(x) == lower(y);
         });
}

bool is_tchar(char c) {
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
    return true;
  }
  return std::string_view("!#$%&'*+-.^_`|~").find(c) != std::string_view::npos;
}

bool is_token(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_tchar);
}

[[noreturn]] void malformed(std::string_view header_name) {
  throw Error(ErrorCode::kMalformedHeader, std::string(header_name));
}

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::kInvalidMessage, why);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool allow_lists_attest(std::string_view value) {
  while (!value.empty()) {
    auto comma = value.find(',');
    auto item = trim(value.substr(0, comma));
    if (item == kAttestMethod) return true;
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return false;
}

bool has_any_attest_header(const std::vector<Header>& headers) {
  return std::any_of(headers.begin(), headers.end(), [](const Header& h) {
    return h.name.size() > 7 && iequals(std::string_view(h.name).substr(0, 7), "Attest-");
  });
}

// Single-valued header lookup; duplicates are malformed.
std::optional<std::string_view> single(const HttpMessage& http, std::string_view name) {
  if (http.header_count(name) > 1) malformed(name);
  return http.header(name);
}

std::string_view required(const HttpMessage& http, std::string_view name) {
  auto v = single(http, name);
  if (!v) malformed(name);
  return *v;
}

Bytes b64_value(std::string_view name, std::string_view value, bool allow_empty = false) {
  auto decoded = b64url_decode(value);
  if (!decoded || (!allow_empty && decoded->empty())) malformed(name);
  return *std::move(decoded);
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_b64(std::string_view name, std::string_view value) {
  // Exact unpadded length is checked before decoding.
  if (value.size() != (N * 4 + 2) / 3) malformed(name);
  auto b = b64_value(name, value);
  if (b.size() != N) malformed(name);
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

std::vector<CipherSuiteId> parse_suite_list(std::string_view value) {
  std::vector<CipherSuiteId> out;
  if (value.empty()) malformed(header::kCipherSuites);
  while (true) {
    auto comma = value.find(',');
    auto tok = value.substr(0, comma);
    if (!is_token(tok)) malformed(header::kCipherSuites);
    out.push_back(CipherSuiteId::parse(tok));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<std::uint32_t> parse_canonical_u32(std::string_view s) {
  if (s.empty() || (s.size() > 1 && s[0] == '0')) return std::nullopt;
  if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() ||
      v > std::numeric_limits<std::uint32_t>::max()) {
    return std::nullopt;
  }
  return static_cast<std::uint32_t>(v);
}

Timestamp date_value(std::string_view value) {
  auto t = parse_imf_fixdate(value);
  if (!t) malformed(header::kDate);
  return *t;
}

struct Encoder {
  HttpMessage& http;
  void add(std::string_view name, std::string value) {
    http.headers.push_back({std::string(name), std::move(value)});
  }
  void add_b64(std::string_view name, ByteView value) { add(name, b64url_encode(value)); }
};

HttpMessage encode_one(const PreflightRequest&) {
  auto http = HttpMessage::request("OPTIONS");
  http.headers.push_back({std::string(header::kAccessControlRequestMethod),
                          std::string(kAttestMethod)});
  return http;
}

HttpMessage encode_one(const PreflightResponse&) {
  auto http = HttpMessage::response(200);
  http.headers.push_back({std::string(header::kAllow), std::string(kAttestMethod)});
  return http;
}

HttpMessage encode_one(const AttestRequest& m) {
  if (m.cipher_suites.empty()) invalid("attest request offers no cipher suites");
  if (m.client_quote.has_value() != m.client_pubkey.has_value()) {
    invalid("client quote and client pubkey must travel together");
  }
  if (m.client_quote && (m.client_quote->empty() || m.client_pubkey->empty())) {
    invalid("empty client quote or pubkey");
  }
  auto http = HttpMessage::request(std::string(kAttestMethod));
  Encoder e{http};
  if (m.date) e.add(header::kDate, format_imf_fixdate(*m.date));
  if (m.session_id) e.add_b64(header::kSessionId, *m.session_id);
  e.add_b64(header::kRandom, m.random);
  e.add(header::kCipherSuites, join_suites(m.cipher_suites));
  if (m.client_quote) {
    e.add_b64(header::kQuote, *m.client_quote);
    e.add_b64(header::kPubkey, *m.client_pubkey);
  }
  return http;
}

HttpMessage encode_one(const AttestResponse& m) {
  if (!m.cipher_suite.recognized()) invalid("server picked an unregistered suite");
  if (m.quote.empty() || m.pubkey.empty()) invalid("empty quote or pubkey");
  auto http = HttpMessage::response(200);
  Encoder e{http};
  e.add(header::kDate, format_imf_fixdate(m.date));
  e.add(header::kQuote, b64url_encode(m.quote) + ";max-age=" + std::to_string(m.max_age));
  e.add_b64(header::kPubkey, m.pubkey);
  e.add_b64(header::kRandom, m.random);
  e.add_b64(header::kSessionId, m.session_id);
  e.add(header::kCipherSuite, m.cipher_suite.token());
  return http;
}

HttpMessage encode_one(const TrustedSessionRequest& m) {
  if (m.secret.empty()) invalid("empty wrapped secret");
  auto http = HttpMessage::request(std::string(kAttestMethod));
  Encoder e{http};
  e.add_b64(header::kSessionId, m.session_id);
  e.add_b64(header::kSecret, m.secret);
  return http;
}

HttpMessage encode_one(const TrustedSessionResponse& m) {
  if (m.server_secret && m.server_secret->empty()) invalid("empty server secret");
  auto http = HttpMessage::response(200);
  Encoder e{http};
  e.add_b64(header::kSessionId, m.session_id);
  e.add_b64(header::kConfirmation, m.confirmation);
  if (m.server_secret) e.add_b64(header::kSecret, *m.server_secret);
  return http;
}

AttestRequest decode_attest_request(const HttpMessage& http) {
  AttestRequest m;
  if (auto d = single(http, header::kDate)) m.date = date_value(*d);
  if (auto s = single(http, header::kSessionId)) {
    m.session_id = fixed_b64<16>(header::kSessionId, *s);
  }
  m.random = fixed_b64<32>(header::kRandom, required(http, header::kRandom));
  m.cipher_suites = parse_suite_list(required(http, header::kCipherSuites));
  auto quote = single(http, header::kQuote);
  auto pubkey = single(http, header::kPubkey);
  if (quote.has_value() != pubkey.has_value()) {
    malformed(quote ? header::kPubkey : header::kQuote);
  }
  if (quote) {
    // Client quotes carry no max-age.
    if (quote->find(';') != std::string_view::npos) malformed(header::kQuote);
    m.client_quote = b64_value(header::kQuote, *quote);
    m.client_pubkey = b64_value(header::kPubkey, *pubkey);
  }
  return m;
}

AttestResponse decode_attest_response(const HttpMessage& http) {
  AttestResponse m;
  m.date = date_value(required(http, header::kDate));
  auto quote = required(http, header::kQuote);
  constexpr std::string_view kParam = ";max-age=";
  auto semi = quote.find(';');
  if (semi == std::string_view::npos || quote.substr(semi, kParam.size()) != kParam) {
    malformed(header::kQuote);
  }
  m.quote = b64_value(header::kQuote, quote.substr(0, semi));
  auto age = parse_canonical_u32(quote.substr(semi + kParam.size()));
  if (!age) malformed(header::kQuote);
  m.max_age = *age;
  m.pubkey = b64_value(header::kPubkey, required(http, header::kPubkey));
  m.random = fixed_b64<32>(header::kRandom, required(http, header::kRandom));
  m.session_id = fixed_b64<16>(header::kSessionId, required(http, header::kSessionId));
  auto suite = required(http, header::kCipherSuite);
  if (!is_token(suite)) malformed(header::kCipherSuite);
  m.cipher_suite = CipherSuiteId::parse(suite);
  if (!m.cipher_suite.recognized()) malformed(header::kCipherSuite);
  return m;
}

TrustedSessionRequest decode_session_request(const HttpMessage& http) {
  TrustedSessionRequest m;
  m.session_id = fixed_b64<16>(header::kSessionId, required(http, header::kSessionId));
  m.secret = b64_value(header::kSecret, required(http, header::kSecret));
  return m;
}

TrustedSessionResponse decode_session_response(const HttpMessage& http) {
  TrustedSessionResponse m;
  m.session_id = fixed_b64<16>(header::kSessionId, required(http, header::kSessionId));
  m.confirmation =
      fixed_b64<32>(header::kConfirmation, required(http, header::kConfirmation));
  if (auto s = single(http, header::kSecret)) {
    m.server_secret = b64_value(header::kSecret, *s);
  }
  return m;
}

constexpr std::array<std::string_view, 7> kDayNames = {"Sun", "Mon", "Tue", "Wed",
                                                       "Thu", "Fri", "Sat"};
constexpr std::array<std::string_view, 12> kMonthNames = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::optional<int> digits(std::string_view s) {
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::string_view suite_token(CipherSuite suite) {
  switch (suite) {
    case CipherSuite::kAes128GcmSha256: return "TCS_AES_128_GCM_SHA256";
    case CipherSuite::kAes256GcmSha384: return "TCS_AES_256_GCM_SHA384";
    case CipherSuite::kChaCha20Poly1305Sha256: return "TCS_CHACHA20_POLY1305_SHA256";
  }
  return "";
}

std::optional<CipherSuite> suite_from_token(std::string_view token) {
  for (auto s : kAllCipherSuites) {
    if (suite_token(s) == token) return s;
  }
  return std::nullopt;
}

AeadAlgorithm suite_aead(CipherSuite suite) {
  switch (suite) {
    case CipherSuite::kAes128GcmSha256: return AeadAlgorithm::kAes128Gcm;
    case CipherSuite::kAes256GcmSha384: return AeadAlgorithm::kAes256Gcm;
    case CipherSuite::kChaCha20Poly1305Sha256: return AeadAlgorithm::kChaCha20Poly1305;
  }
  throw Error(ErrorCode::kUnknownSuite);
}

CipherSuiteId::CipherSuiteId(CipherSuite suite)
    : known_(suite), token_(suite_token(suite)) {}

CipherSuiteId CipherSuiteId::parse(std::string_view token) {
  if (!is_token(token)) malformed(header::kCipherSuites);
  CipherSuiteId id;
  id.known_ = suite_from_token(token);
  id.token_ = std::string(token);
  return id;
}

CipherSuite CipherSuiteId::suite() const {
  if (!known_) throw Error(ErrorCode::kUnknownSuite, token_);
  return *known_;
}

HttpMessage HttpMessage::request(std::string method, std::string target) {
  HttpMessage m;
  m.is_request = true;
  m.method = std::move(method);
  m.target = std::move(target);
  return m;
}

HttpMessage HttpMessage::response(int status) {
  HttpMessage m;
  m.is_request = false;
  m.status = status;
  return m;
}

std::optional<std::string_view> HttpMessage::header(std::string_view name) const {
  for (const auto& h : headers) {
    if (iequals(h.name, name)) return std::string_view(h.value);
  }
  return std::nullopt;
}

std::size_t HttpMessage::header_count(std::string_view name) const {
  return static_cast<std::size_t>(std::count_if(
      headers.begin(), headers.end(), [&](const Header& h) { return iequals(h.name, name); }));
}

void HttpMessage::set_header(std::string_view name, std::string value) {
  std::erase_if(headers, [&](const Header& h) { return iequals(h.name, name); });
  headers.push_back({std::string(name), std::move(value)});
}

Bytes HttpMessage::serialize() const {
  Bytes out;
  if (is_request) {
    append(out, method);
    append(out, " * HTTP/1.1\r\n");
  } else {
    append(out, "HTTP/1.1 " + std::to_string(status) + "\r\n");
  }
  for (const auto& h : headers) {
    append(out, h.name);
    append(out, ": ");
    append(out, h.value);
    append(out, "\r\n");
  }
  append(out, "\r\n");
  append(out, body);
  return out;
}

std::string_view message_kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kPreflightRequest: return "PreflightRequest";
    case MessageKind::kPreflightResponse: return "PreflightResponse";
    case MessageKind::kAttestRequest: return "AttestRequest";
    case MessageKind::kAttestResponse: return "AttestResponse";
    case MessageKind::kTrustedSessionRequest: return "TrustedSessionRequest";
    case MessageKind::kTrustedSessionResponse: return "TrustedSessionResponse";
  }
  return "?";
}

MessageKind kind_of(const AttestMessage& msg) {
  return static_cast<MessageKind>(msg.index());
}

HttpMessage encode_message(const AttestMessage& msg) {
  return std::visit([](const auto& m) { return encode_one(m); }, msg);
}

MessageKind classify_request(std::string_view method, const std::vector<Header>& headers) {
  auto has = [&](std::string_view name) {
    return std::any_of(headers.begin(), headers.end(),
                       [&](const Header& h) { return iequals(h.name, name); });
  };
  if (method == "OPTIONS") {
    for (const auto& h : headers) {
      if (iequals(h.name, header::kAccessControlRequestMethod) &&
          trim(h.value) == kAttestMethod) {
        return MessageKind::kPreflightRequest;
      }
    }
    throw Error(ErrorCode::kNotHttpa, "OPTIONS without ATTEST preflight");
  }
  if (method != kAttestMethod) {
    throw Error(ErrorCode::kNotHttpa, "method " + std::string(method));
  }
  bool attest = has(header::kRandom) || has(header::kCipherSuites);
  bool secret = has(header::kSecret);
  if (attest && secret) throw Error(ErrorCode::kAmbiguous, "attest and secret headers");
  if (secret) return MessageKind::kTrustedSessionRequest;
  if (attest) return MessageKind::kAttestRequest;
  malformed(header::kRandom);
}

MessageKind classify(const HttpMessage& http) {
  if (http.is_request) return classify_request(http.method, http.headers);
  if (http.status != 200) {
    throw Error(ErrorCode::kNotHttpa, "status " + std::to_string(http.status));
  }
  bool attest = http.header(header::kRandom) || http.header(header::kCipherSuite) ||
                http.header(header::kQuote);
  bool confirm = http.header(header::kConfirmation).has_value();
  if (attest && confirm) throw Error(ErrorCode::kAmbiguous, "attest and confirmation headers");
  if (confirm) return MessageKind::kTrustedSessionResponse;
  if (attest) return MessageKind::kAttestResponse;
  auto allow = http.header(header::kAllow);
  if (allow && allow_lists_attest(*allow) && !has_any_attest_header(http.headers)) {
    return MessageKind::kPreflightResponse;
  }
  throw Error(ErrorCode::kNotHttpa, "response does not allow ATTEST");
}

AttestMessage decode_message(const HttpMessage& http) {
  switch (classify(http)) {
    case MessageKind::kPreflightRequest: return PreflightRequest{};
    case MessageKind::kPreflightResponse: return PreflightResponse{};
    case MessageKind::kAttestRequest: return decode_attest_request(http);
    case MessageKind::kAttestResponse: return decode_attest_response(http);
    case MessageKind::kTrustedSessionRequest: return decode_session_request(http);
    case MessageKind::kTrustedSessionResponse: return decode_session_response(http);
  }
  throw Error(ErrorCode::kNotHttpa);
}

CipherSuite negotiate_suite(const std::vector<CipherSuiteId>& client_list,
                            const std::set<CipherSuite>& server_supported) {
  if (client_list.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "client offered no suites");
  }
  for (const auto& id : client_list) {
    if (id.recognized() && server_supported.count(id.suite())) return id.suite();
  }
  throw Error(ErrorCode::kNoCommonSuite);
}

std::string format_imf_fixdate(Timestamp t) {
  using namespace std::chrono;
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss hms{t - day};
  weekday wd{day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s, %02u %s %04d %02d:%02d:%02d GMT",
                kDayNames[wd.c_encoding()].data(), static_cast<unsigned>(ymd.day()),
                kMonthNames[static_cast<unsigned>(ymd.month()) - 1].data(),
                static_cast<int>(ymd.year()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::optional<Timestamp> parse_imf_fixdate(std::string_view s) {
  using namespace std::chrono;
  // "Sun, 06 Nov 1994 08:49:37 GMT" is exactly 29 characters.
  if (s.size() != 29 || s.substr(3, 2) != ", " || s[7] != ' ' || s[11] != ' ' ||
      s[16] != ' ' || s[19] != ':' || s[22] != ':' || s.substr(25) != " GMT") {
    return std::nullopt;
  }
  auto dname = std::find(kDayNames.begin(), kDayNames.end(), s.substr(0, 3));
  auto mname = std::find(kMonthNames.begin(), kMonthNames.end(), s.substr(8, 3));
  auto dd = digits(s.substr(5, 2));
  auto yyyy = digits(s.substr(12, 4));
  auto hh = digits(s.substr(17, 2));
  auto mm = digits(s.substr(20, 2));
  auto ss = digits(s.substr(23, 2));
  if (dname == kDayNames.end() || mname == kMonthNames.end() || !dd || !yyyy || !hh ||
      !mm || !ss || *hh > 23 || *mm > 59 || *ss > 59) {
    return std::nullopt;
  }
  year_month_day ymd{year{*yyyy},
                     month{static_cast<unsigned>(mname - kMonthNames.begin() + 1)},
                     day{static_cast<unsigned>(*dd)}};
  if (!ymd.ok()) return std::nullopt;
  sys_days sd{ymd};
  if (weekday{sd}.c_encoding() != static_cast<unsigned>(dname - kDayNames.begin())) {
    return std::nullopt;
  }
  return Timestamp{sd} + hours{*hh} + minutes{*mm} + seconds{*ss};
}

std::string join_suites(const std::vector<CipherSuiteId>& suites) {
  std::string out;
  for (const auto& s : suites) {
    if (!out.empty()) out.push_back(',');
    out += s.token();
  }
  return out;
}

}  // namespace httpa
