#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wlm {

// All event times are UTC with millisecond precision.
using Millis = std::chrono::milliseconds;
using Timestamp = std::chrono::sys_time<Millis>;

inline Timestamp from_epoch_ms(int64_t ms) { return Timestamp{Millis{ms}}; }
inline int64_t to_epoch_ms(Timestamp t) { return t.time_since_epoch().count(); }

// "2013-02-11T11:01:00Z", or with ".123" when the millisecond part is non-zero.
std::string format_iso8601(Timestamp t);

// Accepts "YYYY-MM-DDTHH:MM:SS[.mmm]Z".
std::optional<Timestamp> parse_iso8601(std::string_view text);

Timestamp wall_now();

}  // namespace wlm
