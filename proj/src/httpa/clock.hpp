#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace httpa {

using Timestamp = std::chrono::sys_seconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  }
};

// Test clock: starts at a fixed instant and only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t unix_seconds) : now_(unix_seconds) {}
  Timestamp now() const override { return Timestamp(std::chrono::seconds(now_.load())); }
  void set(std::int64_t unix_seconds) { now_.store(unix_seconds); }
  void advance(std::int64_t seconds) { now_.fetch_add(seconds); }

 private:
  std::atomic<std::int64_t> now_;
};

inline std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }
inline Timestamp from_unix(std::int64_t s) { return Timestamp(std::chrono::seconds(s)); }

}  // namespace httpa
