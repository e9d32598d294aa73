#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace httpa {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidMessage,
  kNotHttpa,
  kMalformedHeader,
  kAmbiguous,
  kUnsupportedVersion,
  kNoCommonSuite,
  kTruncatedQuote,
  kBadVersion,
  kMalformedQuote,
  kMalformedCertificate,
  kBadVendorCredentials,
  kMalformedRequest,
  kInvalidPolicy,
  kInvalidLength,
  kWrongSecretCount,
  kUnknownSuite,
  kUnwrapFailure,
  kWrongState,
  kTicketExpired,
  kPolicyRejected,
  kFullHandshakeRequired,
  kChannelClosed,
  kOverflow,
  kAuthFailure,
  kReplayOrReorder,
  kNoRoute,
  kUnknownSession,
  kBadConfig,
  kBindFailure,
  kTransport,
  kCrypto,
  kIo,
  kHandshakeFailed,
};

std::string_view error_code_name(ErrorCode code);

// Thrown by every core operation that can fail outside of a handshake verdict.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(detail) {}
  explicit Error(ErrorCode code) : Error(code, "") {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace httpa
