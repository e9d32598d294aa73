#pragma once

// Encoding of HTTPA handshake messages onto HTTP methods, status codes and
// Attest-* headers. All functions here are pure.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "httpa/bytes.hpp"
#include "httpa/clock.hpp"
#include "httpa/crypto.hpp"

namespace httpa {

namespace header {
inline constexpr std::string_view kAccessControlRequestMethod =
    "Access-Control-Request-Method";
inline constexpr std::string_view kAllow = "Allow";
inline constexpr std::string_view kDate = "Attest-Date";
inline constexpr std::string_view kSessionId = "Attest-Session-Id";
inline constexpr std::string_view kRandom = "Attest-Random";
inline constexpr std::string_view kCipherSuites = "Attest-Cipher-Suites";
inline constexpr std::string_view kCipherSuite = "Attest-Cipher-Suite";
inline constexpr std::string_view kQuote = "Attest-Quote";
inline constexpr std::string_view kPubkey = "Attest-Pubkey";
inline constexpr std::string_view kSecret = "Attest-Secret";
inline constexpr std::string_view kConfirmation = "Attest-Confirmation";
inline constexpr std::string_view kContentType = "Content-Type";
}  // namespace header

inline constexpr std::string_view kAttestMethod = "ATTEST";
inline constexpr std::string_view kRecordContentType = "application/httpa-record";

enum class CipherSuite {
  kAes128GcmSha256,
  kAes256GcmSha384,
  kChaCha20Poly1305Sha256,
};

inline constexpr std::array<CipherSuite, 3> kAllCipherSuites = {
    CipherSuite::kAes128GcmSha256, CipherSuite::kAes256GcmSha384,
    CipherSuite::kChaCha20Poly1305Sha256};

std::string_view suite_token(CipherSuite suite);
std::optional<CipherSuite> suite_from_token(std::string_view token);
AeadAlgorithm suite_aead(CipherSuite suite);

// A cipher-suite token as it appeared on the wire. Tokens outside the
// registered set are kept verbatim so they survive a decode/encode cycle.
class CipherSuiteId {
 public:
  CipherSuiteId(CipherSuite suite);  // NOLINT(google-explicit-constructor)
  // Throws MalformedHeader unless token is a non-empty HTTP token.
  static CipherSuiteId parse(std::string_view token);

  bool recognized() const { return known_.has_value(); }
  // Throws UnknownSuite when unrecognized.
  CipherSuite suite() const;
  const std::string& token() const { return token_; }

  friend bool operator==(const CipherSuiteId&, const CipherSuiteId&) = default;

 private:
  CipherSuiteId() = default;
  std::optional<CipherSuite> known_;
  std::string token_;
};

using Random32 = std::array<std::uint8_t, 32>;
using SessionId = std::array<std::uint8_t, 16>;
using MacTag = std::array<std::uint8_t, 32>;

struct Header {
  std::string name;
  std::string value;
  friend bool operator==(const Header&, const Header&) = default;
};

// Transport-neutral view of one HTTP request or response.
struct HttpMessage {
  bool is_request = true;
  std::string method;   // requests
  std::string target = "*";
  int status = 0;       // responses
  std::vector<Header> headers;
  Bytes body;

  static HttpMessage request(std::string method, std::string target = "*");
  static HttpMessage response(int status);

  // Case-insensitive; first match.
  std::optional<std::string_view> header(std::string_view name) const;
  std::size_t header_count(std::string_view name) const;
  void set_header(std::string_view name, std::string value);

  // Canonical bytes used for transcripts:
  //   "METHOD * HTTP/1.1\r\n" or "HTTP/1.1 STATUS\r\n", then
  //   "Name: value\r\n" per header in order, "\r\n", body.
  Bytes serialize() const;
};

enum class MessageKind {
  kPreflightRequest,
  kPreflightResponse,
  kAttestRequest,
  kAttestResponse,
  kTrustedSessionRequest,
  kTrustedSessionResponse,
};

std::string_view message_kind_name(MessageKind kind);

struct PreflightRequest {
  friend bool operator==(const PreflightRequest&, const PreflightRequest&) = default;
};

struct PreflightResponse {
  friend bool operator==(const PreflightResponse&, const PreflightResponse&) = default;
};

struct AttestRequest {
  std::optional<Timestamp> date;
  std::optional<SessionId> session_id;
  Random32 random{};
  std::vector<CipherSuiteId> cipher_suites;
  // Mutual mode only; both or neither.
  std::optional<Bytes> client_quote;
  std::optional<Bytes> client_pubkey;

  bool mutual() const { return client_quote.has_value(); }
  friend bool operator==(const AttestRequest&, const AttestRequest&) = default;
};

struct AttestResponse {
  Timestamp date{};
  Bytes quote;
  std::uint32_t max_age = 0;
  Bytes pubkey;
  Random32 random{};
  SessionId session_id{};
  CipherSuiteId cipher_suite = CipherSuite::kAes128GcmSha256;
  friend bool operator==(const AttestResponse&, const AttestResponse&) = default;
};

struct TrustedSessionRequest {
  SessionId session_id{};
  Bytes secret;
  friend bool operator==(const TrustedSessionRequest&,
                         const TrustedSessionRequest&) = default;
};

struct TrustedSessionResponse {
  SessionId session_id{};
  MacTag confirmation{};
  // Mutual mode: the server's pre-session secret wrapped to the client TEE.
  std::optional<Bytes> server_secret;
  friend bool operator==(const TrustedSessionResponse&,
                         const TrustedSessionResponse&) = default;
};

using AttestMessage =
    std::variant<PreflightRequest, PreflightResponse, AttestRequest,
                 AttestResponse, TrustedSessionRequest, TrustedSessionResponse>;

MessageKind kind_of(const AttestMessage& msg);

// Throws InvalidMessage when msg violates its kind's invariants.
HttpMessage encode_message(const AttestMessage& msg);

// Throws NotHttpa, MalformedHeader (detail = header name) or Ambiguous.
AttestMessage decode_message(const HttpMessage& http);

// Request rules: OPTIONS + Access-Control-Request-Method: ATTEST is a
// preflight; ATTEST with Attest-Random/Attest-Cipher-Suites is an attest
// request; ATTEST with Attest-Secret is a trusted-session request. Responses
// (status 200) mirror this with Allow, Attest-Random/Attest-Cipher-Suite and
// Attest-Confirmation.
MessageKind classify(const HttpMessage& http);
MessageKind classify_request(std::string_view method, const std::vector<Header>& headers);

// First client-preferred suite the server supports. Unrecognized client
// tokens are skipped. Throws NoCommonSuite.
CipherSuite negotiate_suite(const std::vector<CipherSuiteId>& client_list,
                            const std::set<CipherSuite>& server_supported);

// "Sun, 06 Nov 1994 08:49:37 GMT"
std::string format_imf_fixdate(Timestamp t);
std::optional<Timestamp> parse_imf_fixdate(std::string_view s);

std::string join_suites(const std::vector<CipherSuiteId>& suites);

}  // namespace httpa
