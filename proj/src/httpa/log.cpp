#include "httpa/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace httpa {

namespace {

std::atomic<int>& level_storage() {
  static std::atomic<int> level = [] {
    const char* env = std::getenv("HTTPA_LOG");
    auto parsed = env ? parse_log_level(env) : std::nullopt;
    return static_cast<int>(parsed.value_or(LogLevel::kInfo));
  }();
  return level;
}

std::string_view level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kError: return "error";
    case LogLevel::kOff: return "off";
  }
  return "info";
}

}  // namespace

std::optional<LogLevel> parse_log_level(std::string_view name) {
  for (auto l : {LogLevel::kDebug, LogLevel::kInfo, LogLevel::kWarn, LogLevel::kError,
                 LogLevel::kOff}) {
    if (name == level_name(l)) return l;
  }
  return std::nullopt;
}

LogLevel log_level() { return static_cast<LogLevel>(level_storage().load()); }

void set_log_level(LogLevel level) { level_storage().store(static_cast<int>(level)); }

void log_event(LogLevel level, std::string_view event, nlohmann::json fields) {
  if (level < log_level() || level == LogLevel::kOff) return;
  auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
                 .count();
  nlohmann::json line = {{"ts_ms", now}, {"level", level_name(level)}, {"event", event}};
  for (auto& [k, v] : fields.items()) line[k] = v;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << line.dump() << '\n';
}

}  // namespace httpa
