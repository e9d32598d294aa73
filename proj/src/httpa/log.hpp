#pragma once

// Structured logging: one JSON object per line on stderr. The level comes
// from HTTPA_LOG (debug, info, warn, error, off); default info.

#include <string_view>

#include "json.hpp"

namespace httpa {

enum class LogLevel { kDebug, kInfo, kWarn, kError, kOff };

LogLevel log_level();
void set_log_level(LogLevel level);
std::optional<LogLevel> parse_log_level(std::string_view name);

void log_event(LogLevel level, std::string_view event, nlohmann::json fields = nlohmann::json::object());

}  // namespace httpa
