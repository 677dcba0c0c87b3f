#pragma once

#include <string>

namespace recidx {

// Levels follow the RI_LOG environment variable: quiet, info (default), debug.
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace recidx
