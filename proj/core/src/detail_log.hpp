#pragma once

#include <spdlog/spdlog.h>

#include <memory>
#include <utility>

namespace treedp::log {

std::shared_ptr<spdlog::logger> logger();

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  logger()->debug(f, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  logger()->info(f, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  logger()->warn(f, std::forward<Args>(args)...);
}

}  // namespace treedp::log
