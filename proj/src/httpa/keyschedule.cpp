#include "httpa/keyschedule.hpp"

#include "httpa/rng.hpp"

namespace httpa {

std::string_view mode_name(HandshakeMode mode) {
  return mode == HandshakeMode::kOneWay ? "one-way" : "mutual";
}

std::string_view role_name(Role role) { return role == Role::kClient ? "client" : "server"; }

PreSessionSecret PreSessionSecret::generate(Rng& rng) {
  PreSessionSecret s;
  rng.fill(s.bytes);
  return s;
}

KeyBlockLayout key_block_layout(CipherSuite suite) {
  return {32, aead_key_size(suite_aead(suite)), kAeadNonceSize};
}

Bytes KeyBlock::concatenated() const {
  Bytes out;
  for (const auto* field : {&client_write_mac_secret, &server_write_mac_secret,
                            &client_write_key, &server_write_key, &client_write_iv,
                            &server_write_iv}) {
    append(out, *field);
  }
  return out;
}

KeyBlock KeyBlock::partition(CipherSuite suite, ByteView block) {
  auto layout = key_block_layout(suite);
  if (block.size() != layout.total()) {
    throw Error(ErrorCode::kInvalidLength, "key block size");
  }
  KeyBlock kb;
  kb.suite = suite;
  std::size_t off = 0;
  auto take = [&](Bytes& field, std::size_t n) {
    field.assign(block.begin() + off, block.begin() + off + n);
    off += n;
  };
  take(kb.client_write_mac_secret, layout.mac_secret);
  take(kb.server_write_mac_secret, layout.mac_secret);
  take(kb.client_write_key, layout.key);
  take(kb.server_write_key, layout.key);
  take(kb.client_write_iv, layout.iv);
  take(kb.server_write_iv, layout.iv);
  return kb;
}

void KeyBlock::destroy() {
  for (auto* field : {&client_write_mac_secret, &server_write_mac_secret, &client_write_key,
                      &server_write_key, &client_write_iv, &server_write_iv}) {
    secure_wipe(*field);
    field->clear();
  }
}

KeyBlock derive_key_block(HandshakeMode mode, std::span<const PreSessionSecret> secrets,
                          const Random32& client_random, const Random32& server_random,
                          CipherSuite suite) {
  std::size_t expected = mode == HandshakeMode::kOneWay ? 1 : 2;
  if (secrets.size() != expected) {
    throw Error(ErrorCode::kWrongSecretCount,
                std::string(mode_name(mode)) + " needs " + std::to_string(expected));
  }
  Bytes prf_secret;
  for (const auto& s : secrets) append(prf_secret, s.bytes);
  Bytes seed(client_random.begin(), client_random.end());
  append(seed, server_random);
  auto label = mode == HandshakeMode::kOneWay ? kOneWayKeyLabel : kMutualKeyLabel;
  auto block = prf(prf_secret, label, seed, key_block_layout(suite).total());
  secure_wipe(prf_secret);
  auto kb = KeyBlock::partition(suite, block);
  secure_wipe(block);
  return kb;
}

KeyBlock derive_key_block(HandshakeMode mode, std::span<const PreSessionSecret> secrets,
                          const Random32& client_random, const Random32& server_random,
                          const CipherSuiteId& suite) {
  return derive_key_block(mode, secrets, client_random, server_random, suite.suite());
}

WrappedSecret wrap_secret(ByteView tee_pubkey, const PreSessionSecret& secret,
                          const Digest& transcript_hash, Rng& rng) {
  return kem_wrap(tee_pubkey, secret.bytes, transcript_hash, rng);
}

PreSessionSecret unwrap_secret(const SimulatedTee& tee, const WrappedSecret& wrapped,
                               const Digest& transcript_hash) {
  auto raw = tee.unwrap_secret(wrapped, transcript_hash);
  if (!raw) throw Error(ErrorCode::kUnwrapFailure);
  PreSessionSecret s;
  s.bytes = *raw;
  secure_wipe(*raw);
  return s;
}

MacTag confirmation_mac(const KeyBlock& kb, const Digest& transcript_hash, Role role) {
  const auto& key =
      role == Role::kServer ? kb.server_write_mac_secret : kb.client_write_mac_secret;
  Bytes data = to_bytes(kFinishedLabel);
  append(data, transcript_hash);
  return hmac_sha256(key, data);
}

}  // namespace httpa
