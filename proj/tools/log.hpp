#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>

namespace kdpa::cli {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level from the KDPA_LOG environment variable (error|warn|info|debug),
/// defaulting to warn.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("KDPA_LOG");
    if (env == nullptr) return LogLevel::Warn;
    const std::string_view v(env);
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[kdpa %s] %s\n", names[static_cast<int>(level)], message.c_str());
}

}  // namespace kdpa::cli
