#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace deepmne::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level parse_level(std::string_view s, Level fallback = Level::warn) {
  if (s == "error") return Level::error;
  if (s == "warn") return Level::warn;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return fallback;
}

// Threshold is read once from DEEPMNE_LOG.
inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("DEEPMNE_LOG");
    return env ? parse_level(env) : Level::warn;
  }();
  return level;
}

inline void emit(Level level, std::string_view msg) {
  if (level > threshold()) return;
  static std::mutex mu;
  static constexpr std::string_view tags[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[deepmne " << tags[static_cast<int>(level)] << "] " << msg << '\n';
}

template <typename... Args>
void write(Level level, const Args&... args) {
  if (level > threshold()) return;
  std::ostringstream oss;
  (oss << ... << args);
  emit(level, oss.str());
}

template <typename... Args> void error(const Args&... a) { write(Level::error, a...); }
template <typename... Args> void warn(const Args&... a) { write(Level::warn, a...); }
template <typename... Args> void info(const Args&... a) { write(Level::info, a...); }
template <typename... Args> void debug(const Args&... a) { write(Level::debug, a...); }

}  // namespace deepmne::log
