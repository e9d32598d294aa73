#include "httpa/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include "httpa/rng.hpp"

namespace httpa {

namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct CipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

[[noreturn]] void crypto_fail(const char* what) {
  throw Error(ErrorCode::kCrypto, what);
}

PublicKey32 raw_public(EVP_PKEY* pkey) {
  PublicKey32 out{};
  std::size_t len = out.size();
  if (EVP_PKEY_get_raw_public_key(pkey, out.data(), &len) != 1 ||
      len != out.size()) {
    crypto_fail("EVP_PKEY_get_raw_public_key");
  }
  return out;
}

const EVP_CIPHER* cipher_for(AeadAlgorithm alg) {
  switch (alg) {
    case AeadAlgorithm::kAes128Gcm: return EVP_aes_128_gcm();
    case AeadAlgorithm::kAes256Gcm: return EVP_aes_256_gcm();
    case AeadAlgorithm::kChaCha20Poly1305: return EVP_chacha20_poly1305();
  }
  crypto_fail("unknown AEAD");
}

void check_aead_inputs(AeadAlgorithm alg, ByteView key, ByteView nonce) {
  if (key.size() != aead_key_size(alg)) crypto_fail("AEAD key size");
  if (nonce.size() != kAeadNonceSize) crypto_fail("AEAD nonce size");
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  // HMAC() treats a null key pointer as an error even for empty keys.
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), data.data(),
           data.size(), out.data(), &len) == nullptr ||
      len != out.size()) {
    crypto_fail("HMAC");
  }
  return out;
}

struct Sha256::Impl {
  MdCtxPtr ctx{EVP_MD_CTX_new()};
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx.get(), EVP_sha256(), nullptr) != 1) {
    crypto_fail("EVP_DigestInit_ex");
  }
}

Sha256::~Sha256() = default;
Sha256::Sha256(Sha256&&) noexcept = default;
Sha256& Sha256::operator=(Sha256&&) noexcept = default;

Sha256::Sha256(const Sha256& other) : impl_(std::make_unique<Impl>()) {
  if (!impl_->ctx || EVP_MD_CTX_copy_ex(impl_->ctx.get(), other.impl_->ctx.get()) != 1) {
    crypto_fail("EVP_MD_CTX_copy_ex");
  }
}

Sha256& Sha256::operator=(const Sha256& other) {
  if (this != &other) {
    Sha256 copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Sha256::update(ByteView data) {
  if (EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size()) != 1) {
    crypto_fail("EVP_DigestUpdate");
  }
}

Digest Sha256::snapshot() const {
  MdCtxPtr copy(EVP_MD_CTX_new());
  Digest out{};
  unsigned int len = 0;
  if (!copy || EVP_MD_CTX_copy_ex(copy.get(), impl_->ctx.get()) != 1 ||
      EVP_DigestFinal_ex(copy.get(), out.data(), &len) != 1) {
    crypto_fail("EVP_DigestFinal_ex");
  }
  return out;
}

void secure_wipe(std::span<std::uint8_t> data) {
  if (!data.empty()) OPENSSL_cleanse(data.data(), data.size());
}

SigningKey SigningKey::generate(Rng& rng) {
  auto seed = rng.array<32>();
  auto key = from_seed(seed);
  secure_wipe(seed);
  return key;
}

SigningKey SigningKey::from_seed(ByteView seed) {
  if (seed.size() != 32) {
    throw Error(ErrorCode::kInvalidArgument, "Ed25519 seed must be 32 bytes");
  }
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                            seed.data(), seed.size()));
  if (!pkey) crypto_fail("EVP_PKEY_new_raw_private_key(ED25519)");
  SigningKey key;
  std::copy(seed.begin(), seed.end(), key.seed_.begin());
  key.public_key_ = raw_public(pkey.get());
  return key;
}

SigningKey::~SigningKey() { secure_wipe(seed_); }

Signature64 SigningKey::sign(ByteView message) const {
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                            seed_.data(), seed_.size()));
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!pkey || !ctx ||
      EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) {
    crypto_fail("EVP_DigestSignInit");
  }
  Signature64 sig{};
  std::size_t len = sig.size();
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(),
                     message.size()) != 1 ||
      len != sig.size()) {
    crypto_fail("EVP_DigestSign");
  }
  return sig;
}

bool ed25519_verify(ByteView public_key, ByteView message, ByteView signature) {
  if (public_key.size() != kEd25519PublicKeySize ||
      signature.size() != kEd25519SignatureSize) {
    return false;
  }
  PkeyPtr pkey(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr,
                                           public_key.data(), public_key.size()));
  if (!pkey) return false;
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx ||
      EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) {
    return false;
  }
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                          message.data(), message.size()) == 1;
}

KemKeyPair KemKeyPair::generate(Rng& rng) {
  KemKeyPair kp;
  rng.fill(kp.private_key_);
  PkeyPtr pkey(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr,
                                            kp.private_key_.data(),
                                            kp.private_key_.size()));
  if (!pkey) crypto_fail("EVP_PKEY_new_raw_private_key(X25519)");
  kp.public_key_ = raw_public(pkey.get());
  return kp;
}

KemKeyPair::~KemKeyPair() { secure_wipe(private_key_); }

std::array<std::uint8_t, 32> KemKeyPair::agree(ByteView peer_public) const {
  if (peer_public.size() != kX25519KeySize) crypto_fail("X25519 peer key size");
  PkeyPtr self(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr,
                                            private_key_.data(),
                                            private_key_.size()));
  PkeyPtr peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr,
                                           peer_public.data(), peer_public.size()));
  if (!self || !peer) crypto_fail("X25519 key import");
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new(self.get(), nullptr));
  std::array<std::uint8_t, 32> shared{};
  std::size_t len = shared.size();
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
      EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), shared.data(), &len) != 1 ||
      len != shared.size()) {
    crypto_fail("X25519 derive");
  }
  return shared;
}

std::size_t aead_key_size(AeadAlgorithm alg) {
  return alg == AeadAlgorithm::kAes128Gcm ? 16 : 32;
}

Bytes aead_seal(AeadAlgorithm alg, ByteView key, ByteView nonce, ByteView aad,
                ByteView plaintext) {
  check_aead_inputs(alg, key, nonce);
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), cipher_for(alg), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN,
                          static_cast<int>(nonce.size()), nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    crypto_fail("AEAD init");
  }
  if (!aad.empty() &&
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    crypto_fail("AEAD aad");
  }
  Bytes out(plaintext.size() + kAeadTagSize);
  int written = 0;
  if (!plaintext.empty()) {
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1) {
      crypto_fail("AEAD encrypt");
    }
    written = len;
  }
  if (EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
    crypto_fail("AEAD final");
  }
  written += len;
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, kAeadTagSize,
                          out.data() + written) != 1) {
    crypto_fail("AEAD tag");
  }
  out.resize(written + kAeadTagSize);
  return out;
}

std::optional<Bytes> aead_open(AeadAlgorithm alg, ByteView key, ByteView nonce,
                               ByteView aad, ByteView ciphertext) {
  check_aead_inputs(alg, key, nonce);
  if (ciphertext.size() < kAeadTagSize) return std::nullopt;
  auto body = ciphertext.first(ciphertext.size() - kAeadTagSize);
  auto tag = ciphertext.last(kAeadTagSize);
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  int len = 0;
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), cipher_for(alg), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_IVLEN,
                          static_cast<int>(nonce.size()), nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) {
    crypto_fail("AEAD init");
  }
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(),
                        static_cast<int>(aad.size())) != 1) {
    return std::nullopt;
  }
  Bytes out(body.size() + 16);
  int written = 0;
  if (!body.empty()) {
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(),
                          static_cast<int>(body.size())) != 1) {
      return std::nullopt;
    }
    written = len;
  }
  Bytes tag_copy(tag.begin(), tag.end());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, kAeadTagSize,
                          tag_copy.data()) != 1) {
    return std::nullopt;
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) != 1) {
    secure_wipe(out);
    return std::nullopt;
  }
  written += len;
  out.resize(written);
  return out;
}

}  // namespace httpa
