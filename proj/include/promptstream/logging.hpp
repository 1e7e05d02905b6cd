#pragma once

#include <sstream>
#include <string>

namespace promptstream::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Level comes from the PROMPTSTREAM_LOG env var (error|warn|info|debug),
// default info. Output goes to stderr so reports on stdout stay clean.
Level level();
void set_level(Level lv);
void write(Level lv, const std::string& msg);

template <typename... Args>
void emit(Level lv, Args&&... args) {
    if (lv > level()) return;
    std::ostringstream os;
    (os << ... << args);
    write(lv, os.str());
}

template <typename... Args> void error(Args&&... args) { emit(Level::kError, args...); }
template <typename... Args> void warn(Args&&... args) { emit(Level::kWarn, args...); }
template <typename... Args> void info(Args&&... args) { emit(Level::kInfo, args...); }
template <typename... Args> void debug(Args&&... args) { emit(Level::kDebug, args...); }

}  // namespace promptstream::log
