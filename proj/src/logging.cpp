#include "promptstream/logging.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace promptstream::log {

namespace {

Level parse_env() {
    const char* raw = std::getenv("PROMPTSTREAM_LOG");
    if (!raw) return Level::kInfo;
    std::string v(raw);
    if (v == "error") return Level::kError;
    if (v == "warn") return Level::kWarn;
    if (v == "info") return Level::kInfo;
    if (v == "debug") return Level::kDebug;
    return Level::kInfo;
}

Level g_level = parse_env();
std::mutex g_mutex;

const char* tag(Level lv) {
    switch (lv) {
        case Level::kError: return "error";
        case Level::kWarn: return "warn";
        case Level::kInfo: return "info";
        case Level::kDebug: return "debug";
    }
    return "?";
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void write(Level lv, const std::string& msg) {
    std::lock_guard<std::mutex> lk(g_mutex);
    std::cerr << "[" << tag(lv) << "] " << msg << "\n";
}

}  // namespace promptstream::log
