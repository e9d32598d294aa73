#pragma once

// Thin wrappers over OpenSSL for the primitives the protocol needs. Nothing
// here knows about HTTPA message layouts.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include "httpa/bytes.hpp"

namespace httpa {

class Rng;

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

// Incremental SHA-256; snapshot() does not disturb the running state.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256& other);
  Sha256& operator=(const Sha256& other);
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  void update(ByteView data);
  Digest snapshot() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void secure_wipe(std::span<std::uint8_t> data);

inline constexpr std::size_t kEd25519PublicKeySize = 32;
inline constexpr std::size_t kEd25519SignatureSize = 64;
inline constexpr std::size_t kX25519KeySize = 32;

using PublicKey32 = std::array<std::uint8_t, 32>;
using Signature64 = std::array<std::uint8_t, 64>;

// Ed25519 private key held as its 32-byte seed. Signing is deterministic.
class SigningKey {
 public:
  static SigningKey generate(Rng& rng);
  static SigningKey from_seed(ByteView seed);

  SigningKey(const SigningKey&) = default;
  SigningKey& operator=(const SigningKey&) = default;
  ~SigningKey();

  const PublicKey32& public_key() const { return public_key_; }
  Signature64 sign(ByteView message) const;
  // Raw seed, used only when persisting credentials to disk.
  const std::array<std::uint8_t, 32>& seed() const { return seed_; }

 private:
  SigningKey() = default;
  std::array<std::uint8_t, 32> seed_{};
  PublicKey32 public_key_{};
};

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature);

// X25519 keypair. The private half never leaves this object.
class KemKeyPair {
 public:
  static KemKeyPair generate(Rng& rng);

  KemKeyPair(const KemKeyPair&) = delete;
  KemKeyPair& operator=(const KemKeyPair&) = delete;
  KemKeyPair(KemKeyPair&&) noexcept = default;
  KemKeyPair& operator=(KemKeyPair&&) noexcept = default;
  ~KemKeyPair();

  const PublicKey32& public_key() const { return public_key_; }
  // Throws Crypto on an invalid or low-order peer key.
  std::array<std::uint8_t, 32> agree(ByteView peer_public) const;

 private:
  KemKeyPair() = default;
  std::array<std::uint8_t, 32> private_key_{};
  PublicKey32 public_key_{};
};

enum class AeadAlgorithm { kAes128Gcm, kAes256Gcm, kChaCha20Poly1305 };

inline constexpr std::size_t kAeadNonceSize = 12;
inline constexpr std::size_t kAeadTagSize = 16;

std::size_t aead_key_size(AeadAlgorithm alg);

// Returns ciphertext || tag.
Bytes aead_seal(AeadAlgorithm alg, ByteView key, ByteView nonce, ByteView aad,
                ByteView plaintext);
// nullopt when authentication fails.
std::optional<Bytes> aead_open(AeadAlgorithm alg, ByteView key, ByteView nonce,
                               ByteView aad, ByteView ciphertext);

}  // namespace httpa
