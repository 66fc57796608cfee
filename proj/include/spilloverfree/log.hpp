#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace spillfree {

/// Library logger writing to stderr. The level comes from SPILLOVERFREE_LOG
/// (trace, debug, info, warn, err, critical, off); the default is warn.
inline spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto existing = spdlog::get("spilloverfree");
    if (existing) return existing;
    auto log = spdlog::stderr_color_mt("spilloverfree");
    log->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("SPILLOVERFREE_LOG")) {
      level = spdlog::level::from_str(env);
    }
    log->set_level(level);
    return log;
  }();
  return *instance;
}

}  // namespace spillfree
