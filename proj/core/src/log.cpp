#include "detail_log.hpp"
#include "treedp/errors.hpp"
#include "treedp/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>

namespace treedp {

namespace log {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto l = spdlog::stderr_color_mt("treedp");
    l->set_level(spdlog::level::warn);
    l->set_pattern("[%l] %v");
    return l;
  }();
  return instance;
}

}  // namespace log

void set_log_level(const std::string& level) {
  const auto lv = spdlog::level::from_str(level);
  if (lv == spdlog::level::off && level != "off")
    throw InvalidArgument("unknown log level '" + level + "'");
  log::logger()->set_level(lv);
}

std::string init_logging_from_env(const std::string& fallback) {
  const char* env = std::getenv("TREEDP_LOG");
  const std::string level = (env && *env) ? env : fallback;
  set_log_level(level);
  return level;
}

}  // namespace treedp
