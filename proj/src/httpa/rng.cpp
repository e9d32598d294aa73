#include "httpa/rng.hpp"

#include <openssl/rand.h>

namespace httpa {

void SystemRng::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw Error(ErrorCode::kCrypto, "RAND_bytes");
  }
}

SeededRng::SeededRng(std::uint64_t seed, std::string_view label) {
  Bytes material = to_bytes("httpa seeded rng");
  put_u64(material, seed);
  append(material, label);
  key_ = sha256(material);
}

void SeededRng::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mu_);
  for (auto& byte : out) {
    if (used_ == block_.size()) {
      Bytes ctr;
      put_u64(ctr, counter_++);
      block_ = hmac_sha256(key_, ctr);
      used_ = 0;
    }
    byte = block_[used_++];
  }
}

}  // namespace httpa
