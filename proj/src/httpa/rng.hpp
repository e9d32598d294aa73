#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>

#include "httpa/crypto.hpp"

namespace httpa {

class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }
  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }
  std::uint64_t u64() {
    auto b = array<8>();
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
  }
};

// OpenSSL RAND_bytes.
class SystemRng final : public Rng {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

// Deterministic stream for golden transcripts and reproducible tests:
// block i = HMAC-SHA256(K, be64(i)), K = SHA256("httpa seeded rng" || be64(seed) || label).
// Not for production use.
class SeededRng final : public Rng {
 public:
  SeededRng(std::uint64_t seed, std::string_view label);
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mu_;
  Digest key_{};
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t used_ = 32;
};

}  // namespace httpa
