#include "httpa/prf.hpp"

#include "httpa/crypto.hpp"

namespace httpa {

Bytes prf(ByteView secret, std::string_view label, ByteView seed, std::size_t out_len) {
  if (secret.empty()) throw Error(ErrorCode::kInvalidLength, "empty PRF secret");
  if (out_len == 0 || out_len > kMaxPrfOutput) {
    throw Error(ErrorCode::kInvalidLength, "PRF output length " + std::to_string(out_len));
  }
  Bytes label_seed = to_bytes(label);
  append(label_seed, seed);

  Bytes out;
  out.reserve(out_len + 32);
  Bytes a = label_seed;
  while (out.size() < out_len) {
    auto next = hmac_sha256(secret, a);
    a.assign(next.begin(), next.end());
    Bytes block_input = a;
    append(block_input, label_seed);
    append(out, hmac_sha256(secret, block_input));
  }
  out.resize(out_len);
  return out;
}

}  // namespace httpa
