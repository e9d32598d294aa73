#pragma once

// Golden-file helpers. Set HTTPA_REGEN_GOLDEN=1 to rewrite the files instead
// of comparing against them.

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "httpa/bytes.hpp"

namespace httpa::test {

inline std::string data_path(const std::string& rel) {
  return std::string(HTTPA_TEST_DATA_DIR) + "/" + rel;
}

inline std::optional<Bytes> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

inline bool regenerating() {
  const char* v = std::getenv("HTTPA_REGEN_GOLDEN");
  return v && std::string(v) == "1";
}

// Returns the frozen bytes, writing `actual` first when regenerating.
inline std::optional<Bytes> golden(const std::string& rel, const Bytes& actual) {
  auto path = data_path(rel);
  if (regenerating()) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(actual.data()),
              static_cast<std::streamsize>(actual.size()));
  }
  return read_file(path);
}

}  // namespace httpa::test
