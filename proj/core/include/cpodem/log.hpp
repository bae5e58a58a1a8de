#pragma once

#include <string_view>

namespace cpodem::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

/// Messages below this level are dropped. Defaults to Warn, or to the value
/// of CPODEM_LOG (debug, info, warn, error, off) when set.
void set_level(Level level) noexcept;
Level level() noexcept;

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace cpodem::log
