#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace vitaltext::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

namespace detail {

inline Level level_from_string(const std::string& s) {
    if (s == "debug") return Level::kDebug;
    if (s == "info") return Level::kInfo;
    if (s == "warn") return Level::kWarn;
    if (s == "error") return Level::kError;
    return Level::kInfo;
}

struct State {
    Level level;
    std::ofstream file;   // optional tee target, set by the CLI per command
    std::mutex mu;

    State() : level(Level::kInfo) {
        // VITALTEXT_LOG is the only environment variable the toolkit reads.
        if (const char* env = std::getenv("VITALTEXT_LOG")) {
            level = level_from_string(env);
        }
    }
};

inline State& state() {
    static State s;
    return s;
}

inline const char* tag(Level l) {
    switch (l) {
        case Level::kDebug: return "debug";
        case Level::kInfo: return "info ";
        case Level::kWarn: return "warn ";
        case Level::kError: return "error";
    }
    return "?";
}

inline void emit(Level l, const std::string& msg) {
    State& s = state();
    if (l < s.level && !s.file.is_open()) return;
    std::lock_guard<std::mutex> lock(s.mu);
    if (l >= s.level) {
        std::ostream& out = (l >= Level::kWarn) ? std::cerr : std::cout;
        out << "[" << tag(l) << "] " << msg << "\n";
    }
    if (s.file.is_open()) {
        s.file << "[" << tag(l) << "] " << msg << "\n";
        s.file.flush();
    }
}

}  // namespace detail

inline void set_level(Level l) { detail::state().level = l; }
inline Level level() { return detail::state().level; }

// Tee all log lines (regardless of console level) into the given file.
inline void open_run_log(const std::string& path) {
    detail::state().file.close();
    detail::state().file.clear();
    detail::state().file.open(path, std::ios::out | std::ios::trunc);
}

inline void close_run_log() { detail::state().file.close(); }

inline void debug(const std::string& msg) { detail::emit(Level::kDebug, msg); }
inline void info(const std::string& msg) { detail::emit(Level::kInfo, msg); }
inline void warn(const std::string& msg) { detail::emit(Level::kWarn, msg); }
inline void error(const std::string& msg) { detail::emit(Level::kError, msg); }

}  // namespace vitaltext::log
