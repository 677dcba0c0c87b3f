#include "log.hpp"

#include <cstdlib>
#include <cstring>
#include <iostream>

namespace recidx {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("RI_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

// All diagnostics go to stderr so command output files and stdout stay clean.
void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[recidx] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[recidx:debug] " << msg << "\n";
}

}  // namespace recidx
