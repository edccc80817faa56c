#include "deltarank/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace deltarank {

namespace {
std::atomic<LogLevel> g_level{LogLevel::info};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) noexcept { g_level = level; }
LogLevel log_level() noexcept { return g_level; }

void log(LogLevel level, std::string_view message)
{
    if (level < g_level.load()) {
        return;
    }
    static constexpr std::string_view kNames[] = {"debug", "info", "warning", "error"};
    std::lock_guard lock(g_mutex);
    std::cerr << kNames[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace deltarank
