#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace dsd {

using Timestamp = std::chrono::sys_seconds;

// Wall clock source; injectable so tests can pin timestamps.
using Clock = std::function<Timestamp()>;

Timestamp system_now();

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with an optional "Z" or
// "+HH:MM"/"-HH:MM" suffix. A space may replace the 'T'. Throws dsd::InvalidArgument.
Timestamp parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp ts);

}  // namespace dsd
