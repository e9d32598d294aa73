#pragma once

// Secret wrapping to an X25519 public key:
//   eph    = fresh X25519 keypair
//   shared = X25519(eph.private, recipient_public)
//   k||n   = prf(shared, "httpa secret wrap", eph.public || recipient_public, 32 + 12)
//   ct     = AES-256-GCM(k, n, aad = transcript hash, secret)
// Wire form: eph.public(32) || ct(32) || tag(16).

#include <array>
#include <optional>

#include "httpa/bytes.hpp"
#include "httpa/crypto.hpp"

namespace httpa {

class Rng;

inline constexpr std::size_t kPreSessionSecretSize = 32;
inline constexpr std::size_t kWrappedSecretSize = 32 + kPreSessionSecretSize + kAeadTagSize;

struct WrappedSecret {
  std::array<std::uint8_t, 32> encapsulated_key{};
  Bytes ciphertext;

  Bytes encode() const;
  // Throws MalformedHeader unless the input is exactly kWrappedSecretSize.
  static WrappedSecret decode(ByteView wire);
  friend bool operator==(const WrappedSecret&, const WrappedSecret&) = default;
};

WrappedSecret kem_wrap(ByteView recipient_public, ByteView secret, ByteView aad, Rng& rng);
std::optional<std::array<std::uint8_t, 32>> kem_unwrap(const KemKeyPair& recipient,
                                                       const WrappedSecret& wrapped,
                                                       ByteView aad);

}  // namespace httpa
