#include "cpodem/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace cpodem::log {
namespace {

Level initial_level() {
  const char* env = std::getenv("CPODEM_LOG");
  if (!env) return Level::Warn;
  const std::string s(env);
  if (s == "debug") return Level::Debug;
  if (s == "info") return Level::Info;
  if (s == "error") return Level::Error;
  if (s == "off") return Level::Off;
  return Level::Warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{initial_level()};
  return lvl;
}

void emit(Level lvl, std::string_view tag, std::string_view msg) {
  if (lvl < current().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[cpodem " << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) noexcept { current().store(level); }
Level level() noexcept { return current().load(); }

void debug(std::string_view msg) { emit(Level::Debug, "debug", msg); }
void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }
void error(std::string_view msg) { emit(Level::Error, "error", msg); }

}  // namespace cpodem::log
