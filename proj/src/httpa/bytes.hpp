#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "httpa/error.hpp"

namespace httpa {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}
inline std::string to_string(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

template <std::size_t N>
Bytes to_vector(const std::array<std::uint8_t, N>& a) {
  return {a.begin(), a.end()};
}

// Throws InvalidArgument unless b.size() == N.
template <std::size_t N>
std::array<std::uint8_t, N> to_array(ByteView b) {
  if (b.size() != N) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(N) + " bytes, got " +
                    std::to_string(b.size()));
  }
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

void append(Bytes& out, ByteView more);
void append(Bytes& out, std::string_view more);
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
// u16 length prefix followed by the bytes; throws InvalidArgument above 65535.
void put_len16(Bytes& out, ByteView field);

std::string hex_encode(ByteView b);
// nullopt on odd length or a non-hex digit. Accepts either case.
std::optional<Bytes> hex_decode(std::string_view s);
Bytes hex_decode_or_throw(std::string_view s);

// RFC 4648 base64url without padding.
std::string b64url_encode(ByteView b);
// Canonical form only: no padding, no whitespace, unused trailing bits zero.
std::optional<Bytes> b64url_decode(std::string_view s);

// Sequential big-endian reader over a byte span. Any short read throws
// Error(short_code).
class ByteReader {
 public:
  ByteReader(ByteView data, ErrorCode short_code)
      : data_(data), short_code_(short_code) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView take(std::size_t n);
  ByteView len16();
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
  ErrorCode short_code_;
};

// Constant-time equality for equal-length inputs; false on length mismatch.
bool constant_time_equal(ByteView a, ByteView b);

}  // namespace httpa
