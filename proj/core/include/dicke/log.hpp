#pragma once

#include <functional>
#include <string>

namespace dicke {

/// Receives non-fatal diagnostics (validity-regime warnings and the like).
using WarningSink = std::function<void(const std::string&)>;

/// Replaces the process-wide sink; the default writes to stderr. Passing an
/// empty function silences warnings. Thread-safe.
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace dicke
