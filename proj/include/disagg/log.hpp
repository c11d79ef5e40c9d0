#pragma once

#include <functional>
#include <string>

namespace disagg::log {

using Sink = std::function<void(const std::string&)>;

/// Replaces the warning sink (default: stderr). Returns the previous sink.
Sink set_sink(Sink sink);

void warn(const std::string& message);

}  // namespace disagg::log
