#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace gradcode::log {

// Levels: error=0, warn=1, info=2, debug=3. Controlled by GRADCODE_LOG
// (error|warn|info|debug); default warn.
inline int level() {
  static int lvl = [] {
    const char* env = std::getenv("GRADCODE_LOG");
    if (!env) return 1;
    std::string s(env);
    if (s == "error") return 0;
    if (s == "warn") return 1;
    if (s == "info") return 2;
    if (s == "debug") return 3;
    return 1;
  }();
  return lvl;
}

inline void emit(int lvl, const char* tag, const std::string& msg) {
  if (lvl > level()) return;
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
}

inline void error(const std::string& msg) { emit(0, "error", msg); }
inline void warn(const std::string& msg) { emit(1, "warn", msg); }
inline void info(const std::string& msg) { emit(2, "info", msg); }
inline void debug(const std::string& msg) { emit(3, "debug", msg); }

}  // namespace gradcode::log
