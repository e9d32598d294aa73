#include "httpa/kem.hpp"

#include "httpa/prf.hpp"
#include "httpa/rng.hpp"
#include "httpa/wire.hpp"

namespace httpa {

namespace {

constexpr std::string_view kWrapLabel = "httpa secret wrap";

struct WrapKeys {
  Bytes material;
  ByteView key() const { return ByteView(material).first(32); }
  ByteView nonce() const { return ByteView(material).subspan(32, kAeadNonceSize); }
  ~WrapKeys() { secure_wipe(material); }
};

WrapKeys derive(std::array<std::uint8_t, 32> shared, ByteView eph_public,
                ByteView recipient_public) {
  Bytes seed(eph_public.begin(), eph_public.end());
  append(seed, recipient_public);
  WrapKeys keys{prf(shared, kWrapLabel, seed, 32 + kAeadNonceSize)};
  secure_wipe(shared);
  return keys;
}

}  // namespace

Bytes WrappedSecret::encode() const {
  Bytes out(encapsulated_key.begin(), encapsulated_key.end());
  append(out, ciphertext);
  return out;
}

WrappedSecret WrappedSecret::decode(ByteView wire) {
  if (wire.size() != kWrappedSecretSize) {
    throw Error(ErrorCode::kMalformedHeader, std::string(header::kSecret));
  }
  WrappedSecret w;
  std::copy_n(wire.begin(), 32, w.encapsulated_key.begin());
  w.ciphertext.assign(wire.begin() + 32, wire.end());
  return w;
}

WrappedSecret kem_wrap(ByteView recipient_public, ByteView secret, ByteView aad, Rng& rng) {
  if (secret.size() != kPreSessionSecretSize) {
    throw Error(ErrorCode::kInvalidArgument, "pre-session secret must be 32 bytes");
  }
  auto eph = KemKeyPair::generate(rng);
  auto keys = derive(eph.agree(recipient_public), eph.public_key(), recipient_public);
  WrappedSecret w;
  w.encapsulated_key = eph.public_key();
  w.ciphertext = aead_seal(AeadAlgorithm::kAes256Gcm, keys.key(), keys.nonce(), aad, secret);
  return w;
}

std::optional<std::array<std::uint8_t, 32>> kem_unwrap(const KemKeyPair& recipient,
                                                       const WrappedSecret& wrapped,
                                                       ByteView aad) {
  std::array<std::uint8_t, 32> shared{};
  try {
    shared = recipient.agree(wrapped.encapsulated_key);
  } catch (const Error&) {
    return std::nullopt;
  }
  auto keys = derive(shared, wrapped.encapsulated_key, recipient.public_key());
  auto plain = aead_open(AeadAlgorithm::kAes256Gcm, keys.key(), keys.nonce(), aad,
                         wrapped.ciphertext);
  if (!plain || plain->size() != kPreSessionSecretSize) return std::nullopt;
  std::array<std::uint8_t, 32> out{};
  std::copy(plain->begin(), plain->end(), out.begin());
  secure_wipe(*plain);
  return out;
}

}  // namespace httpa
