#pragma once

#include <cstddef>
#include <string_view>

#include "httpa/bytes.hpp"

namespace httpa {

inline constexpr std::size_t kMaxPrfOutput = 1024;

// P_SHA256 expansion:
//   A(0) = label || seed, A(i) = HMAC(secret, A(i-1))
//   out  = HMAC(secret, A(1) || label || seed) || HMAC(secret, A(2) || label || seed) ...
// truncated to out_len. Throws InvalidLength for an empty secret, out_len of
// zero or out_len above kMaxPrfOutput.
Bytes prf(ByteView secret, std::string_view label, ByteView seed, std::size_t out_len);

}  // namespace httpa
