#include "srv6kit/core/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>

namespace srv6kit::log {

namespace {

std::mutex g_mu;
spdlog::sink_ptr g_sink;
spdlog::level::level_enum g_level = spdlog::level::warn;

void init_locked()
{
    if (g_sink)
        return;
    g_sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    g_sink->set_pattern("%Y-%m-%dT%H:%M:%S.%f %l %n %v");
    if (const char* env = std::getenv("SRV6_KIT_LOG"))
        g_level = spdlog::level::from_str(env);
}

}  // namespace

std::shared_ptr<spdlog::logger> get(const std::string& component)
{
    std::lock_guard lk(g_mu);
    init_locked();
    if (auto l = spdlog::get(component))
        return l;
    auto l = std::make_shared<spdlog::logger>(component, g_sink);
    l->set_level(g_level);
    spdlog::register_logger(l);
    return l;
}

void set_level(const std::string& level)
{
    std::lock_guard lk(g_mu);
    init_locked();
    g_level = spdlog::level::from_str(level);
    spdlog::apply_all([](const std::shared_ptr<spdlog::logger>& l) { l->set_level(g_level); });
}

}  // namespace srv6kit::log
