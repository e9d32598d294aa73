#include "httpa/error.hpp"

namespace httpa {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidMessage: return "InvalidMessage";
    case ErrorCode::kNotHttpa: return "NotHttpa";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kAmbiguous: return "Ambiguous";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kNoCommonSuite: return "NoCommonSuite";
    case ErrorCode::kTruncatedQuote: return "TruncatedQuote";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kMalformedQuote: return "MalformedQuote";
    case ErrorCode::kMalformedCertificate: return "MalformedCertificate";
    case ErrorCode::kBadVendorCredentials: return "BadVendorCredentials";
    case ErrorCode::kMalformedRequest: return "MalformedRequest";
    case ErrorCode::kInvalidPolicy: return "InvalidPolicy";
    case ErrorCode::kInvalidLength: return "InvalidLength";
    case ErrorCode::kWrongSecretCount: return "WrongSecretCount";
    case ErrorCode::kUnknownSuite: return "UnknownSuite";
    case ErrorCode::kUnwrapFailure: return "UnwrapFailure";
    case ErrorCode::kWrongState: return "WrongState";
    case ErrorCode::kTicketExpired: return "TicketExpired";
    case ErrorCode::kPolicyRejected: return "PolicyRejected";
    case ErrorCode::kFullHandshakeRequired: return "FullHandshakeRequired";
    case ErrorCode::kChannelClosed: return "ChannelClosed";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kAuthFailure: return "AuthFailure";
    case ErrorCode::kReplayOrReorder: return "ReplayOrReorder";
    case ErrorCode::kNoRoute: return "NoRoute";
    case ErrorCode::kUnknownSession: return "UnknownSession";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kCrypto: return "CryptoError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kHandshakeFailed: return "HandshakeFailed";
  }
  return "Unknown";
}

}  // namespace httpa
