#pragma once

#include <cstdint>
#include <string>

namespace tracegap {

// All timestamps are UTC epoch seconds. Wall-clock semantics (night
// windows, day grids) are applied through a fixed dataset UTC offset.
using EpochSeconds = std::int64_t;

constexpr std::int64_t kSecondsPerMinute = 60;
constexpr std::int64_t kSecondsPerHour = 3600;
constexpr std::int64_t kSecondsPerDay = 86400;

/// Parses an ISO-8601 timestamp with `Z` or a `+hh:mm`/`-hh:mm` offset.
/// Throws std::invalid_argument on malformed input.
EpochSeconds parse_iso8601(const std::string& text);

/// Formats epoch seconds as `YYYY-MM-DDThh:mm:ssZ`.
std::string format_iso8601(EpochSeconds t);

/// Seconds since local midnight for the given dataset UTC offset.
std::int64_t local_second_of_day(EpochSeconds t, std::int64_t utc_offset_s);

/// Day of week in local time, 0 = Monday .. 6 = Sunday.
int local_day_of_week(EpochSeconds t, std::int64_t utc_offset_s);

/// True if the local wall-clock time falls in [22:00, 05:00).
bool is_night(EpochSeconds t, std::int64_t utc_offset_s);

}  // namespace tracegap
