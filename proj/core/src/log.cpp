#include "arg/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

#include "arg/error.hpp"

namespace arg {

namespace {

LogLevel from_env() {
  const char* env = std::getenv("ARG_LOG");
  if (!env || !*env) return LogLevel::Error;
  try {
    return parse_log_level(env);
  } catch (const ConfigError&) {
    std::cerr << "[arg] ignoring unknown ARG_LOG value '" << env << "'\n";
    return LogLevel::Error;
  }
}

std::atomic<int>& level_slot() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

void emit(LogLevel level, const char* tag, std::string_view msg) {
  if (static_cast<int>(level) > level_slot().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[arg " << tag << "] " << msg << '\n';
}

}  // namespace

LogLevel parse_log_level(std::string_view s) {
  if (s == "error") return LogLevel::Error;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw ConfigError("unknown log level '" + std::string(s) + "'");
}

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load()); }
void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

void log_error(std::string_view msg) { emit(LogLevel::Error, "error", msg); }
void log_info(std::string_view msg) { emit(LogLevel::Info, "info", msg); }
void log_debug(std::string_view msg) { emit(LogLevel::Debug, "debug", msg); }

}  // namespace arg
