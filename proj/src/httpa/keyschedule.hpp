#pragma once

// Trusted-session key schedule: pre-session secrets, key-block derivation and
// partition, secret wrapping to a TEE key, and the handshake confirmation MAC.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "httpa/bytes.hpp"
#include "httpa/kem.hpp"
#include "httpa/prf.hpp"
#include "httpa/quote.hpp"
#include "httpa/wire.hpp"

namespace httpa {

class Rng;

enum class HandshakeMode { kOneWay, kMutual };
enum class Role : std::uint8_t { kClient = 1, kServer = 2 };

std::string_view mode_name(HandshakeMode mode);
std::string_view role_name(Role role);

inline constexpr std::string_view kOneWayKeyLabel = "trusted session keys";
inline constexpr std::string_view kMutualKeyLabel = "trusted mutual session keys";
inline constexpr std::string_view kFinishedLabel = "httpa finished";

struct PreSessionSecret {
  std::array<std::uint8_t, kPreSessionSecretSize> bytes{};

  static PreSessionSecret generate(Rng& rng);
  void destroy() { secure_wipe(bytes); }
  ~PreSessionSecret() { destroy(); }
};

struct KeyBlockLayout {
  std::size_t mac_secret;
  std::size_t key;
  std::size_t iv;
  std::size_t total() const { return 2 * mac_secret + 2 * key + 2 * iv; }
};

// AES-128-GCM: key 16; AES-256-GCM and ChaCha20-Poly1305: key 32. MAC
// secrets 32 and IVs 12 for every suite.
KeyBlockLayout key_block_layout(CipherSuite suite);

struct KeyBlock {
  CipherSuite suite = CipherSuite::kAes128GcmSha256;
  Bytes client_write_mac_secret;
  Bytes server_write_mac_secret;
  Bytes client_write_key;
  Bytes server_write_key;
  Bytes client_write_iv;
  Bytes server_write_iv;

  // Fields concatenated in partition order.
  Bytes concatenated() const;
  static KeyBlock partition(CipherSuite suite, ByteView block);
  void destroy();

  friend bool operator==(const KeyBlock&, const KeyBlock&) = default;
};

// OneWay: prf(secret, "trusted session keys", client_random || server_random).
// Mutual: prf(server_secret || client_secret, "trusted mutual session keys",
//             client_random || server_random).
// secrets holds one entry for OneWay and {server, client} for Mutual; other
// counts throw WrongSecretCount.
KeyBlock derive_key_block(HandshakeMode mode, std::span<const PreSessionSecret> secrets,
                          const Random32& client_random, const Random32& server_random,
                          CipherSuite suite);
// Throws UnknownSuite for an unrecognized suite token.
KeyBlock derive_key_block(HandshakeMode mode, std::span<const PreSessionSecret> secrets,
                          const Random32& client_random, const Random32& server_random,
                          const CipherSuiteId& suite);

WrappedSecret wrap_secret(ByteView tee_pubkey, const PreSessionSecret& secret,
                          const Digest& transcript_hash, Rng& rng);
// Throws UnwrapFailure.
PreSessionSecret unwrap_secret(const SimulatedTee& tee, const WrappedSecret& wrapped,
                               const Digest& transcript_hash);

// HMAC-SHA256(mac_secret[role], "httpa finished" || transcript_hash).
MacTag confirmation_mac(const KeyBlock& kb, const Digest& transcript_hash, Role role);

}  // namespace httpa
