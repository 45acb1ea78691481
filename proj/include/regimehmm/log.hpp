#pragma once

#include <string>

namespace regimehmm::logging {

// Verbosity from REGIME_HMM_LOG: off | warn | info | debug. Default: warn.
enum class Level {
    off = 0,
    warn = 1,
    info = 2,
    debug = 3,
};

Level level() noexcept;
bool enabled(Level lvl) noexcept;

// Writes "regimehmm: <message>" to stderr when the level is enabled.
void write(Level lvl, const std::string& message);

inline void warn(const std::string& message) { write(Level::warn, message); }
inline void info(const std::string& message) { write(Level::info, message); }
inline void debug(const std::string& message) { write(Level::debug, message); }

}  // namespace regimehmm::logging
