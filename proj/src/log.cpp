#include "grapl/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>

namespace grapl {

void configure_logging(const std::string& level) {
    static const bool installed = [] {
        auto logger = std::make_shared<spdlog::logger>("grapl", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        return true;
    }();
    (void)installed;
    auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && level != "off") parsed = spdlog::level::info;
    spdlog::set_level(parsed);
}

void configure_logging() {
    const char* env = std::getenv("GRAPL_LOG");
    configure_logging(env ? env : "info");
}

}  // namespace grapl
