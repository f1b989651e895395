#pragma once

#include <string>

namespace treedp {

// Levels: trace, debug, info, warn, error, off. Diagnostics go to stderr.
void set_log_level(const std::string& level);

// Applies TREEDP_LOG when set; returns the level in effect.
std::string init_logging_from_env(const std::string& fallback = "warn");

}  // namespace treedp
