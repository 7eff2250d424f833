#pragma once

#include <memory>
#include <string>

#include <spdlog/spdlog.h>

namespace srv6kit::log {

/// Logger for one component. Lines go to stderr as
/// `ts level component message`; level comes from SRV6_KIT_LOG
/// (trace|debug|info|warn|error|off, default warn).
std::shared_ptr<spdlog::logger> get(const std::string& component);

void set_level(const std::string& level);

}  // namespace srv6kit::log
