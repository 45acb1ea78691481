#include "regimehmm/log.hpp"

#include <cstdlib>
#include <iostream>

namespace regimehmm::logging {

namespace {

Level parse_level() noexcept {
    const char* env = std::getenv("REGIME_HMM_LOG");
    if (env == nullptr) {
        return Level::warn;
    }
    const std::string value(env);
    if (value == "off") return Level::off;
    if (value == "warn") return Level::warn;
    if (value == "info") return Level::info;
    if (value == "debug") return Level::debug;
    return Level::warn;
}

}  // namespace

Level level() noexcept {
    static const Level lvl = parse_level();
    return lvl;
}

bool enabled(Level lvl) noexcept { return lvl <= level(); }

void write(Level lvl, const std::string& message) {
    if (enabled(lvl)) {
        std::cerr << "regimehmm: " << message << '\n';
    }
}

}  // namespace regimehmm::logging
