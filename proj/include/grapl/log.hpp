#pragma once

#include <spdlog/spdlog.h>

namespace grapl {

/// Routes library logging to stderr and applies the GRAPL_LOG level
/// (trace, debug, info, warn, error, critical, off). Unset means info.
void configure_logging();

/// Same, with an explicit level name; unknown names fall back to info.
void configure_logging(const std::string& level);

}  // namespace grapl
