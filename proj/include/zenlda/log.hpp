#pragma once

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace zenlda {
namespace log {

enum Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Log level comes from the ZEN_LOG environment variable: error|warn|info|debug.
inline Level threshold() {
  static Level level = [] {
    const char* env = std::getenv("ZEN_LOG");
    if (env == nullptr) return kWarn;
    if (std::strcmp(env, "error") == 0) return kError;
    if (std::strcmp(env, "warn") == 0) return kWarn;
    if (std::strcmp(env, "info") == 0) return kInfo;
    if (std::strcmp(env, "debug") == 0) return kDebug;
    return kWarn;
  }();
  return level;
}

inline void emit(Level level, const char* tag, const char* fmt, va_list args) {
  if (level > threshold()) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
}

inline void error(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  emit(kError, "error", fmt, args);
  va_end(args);
}

inline void warn(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  emit(kWarn, "warn", fmt, args);
  va_end(args);
}

inline void info(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  emit(kInfo, "info", fmt, args);
  va_end(args);
}

inline void debug(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  emit(kDebug, "debug", fmt, args);
  va_end(args);
}

}  // namespace log
}  // namespace zenlda
