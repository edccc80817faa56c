#pragma once

#include <string_view>

namespace deltarank {

enum class LogLevel { debug, info, warning, error, off };

/// Messages below this level are dropped. Defaults to info.
void set_log_level(LogLevel level) noexcept;
LogLevel log_level() noexcept;

void log(LogLevel level, std::string_view message);
inline void log_info(std::string_view message) { log(LogLevel::info, message); }
inline void log_warning(std::string_view message) { log(LogLevel::warning, message); }

}  // namespace deltarank
