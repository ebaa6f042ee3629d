#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace mec::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

// Verbosity comes from the MEC_LOG environment variable (error|warn|info|debug).
inline Level threshold() {
  static Level cached = [] {
    const char* env = std::getenv("MEC_LOG");
    if (env == nullptr) return Level::warn;
    if (std::strcmp(env, "error") == 0) return Level::error;
    if (std::strcmp(env, "info") == 0) return Level::info;
    if (std::strcmp(env, "debug") == 0) return Level::debug;
    return Level::warn;
  }();
  return cached;
}

inline void emit(Level level, const std::string& message) {
  if (level > threshold()) return;
  const char* tag = "warn";
  switch (level) {
    case Level::error: tag = "error"; break;
    case Level::warn: tag = "warn"; break;
    case Level::info: tag = "info"; break;
    case Level::debug: tag = "debug"; break;
  }
  std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

inline void error(const std::string& m) { emit(Level::error, m); }
inline void warn(const std::string& m) { emit(Level::warn, m); }
inline void info(const std::string& m) { emit(Level::info, m); }
inline void debug(const std::string& m) { emit(Level::debug, m); }

}  // namespace mec::log
