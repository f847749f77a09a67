#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace routefed {

// Minutes since 1970-01-01 00:00 of the local (JST) wall clock. No zone
// arithmetic is done anywhere; all inputs are assumed to be local time.
using EpochMinutes = std::int64_t;

inline constexpr std::int64_t kMinutesPerDay = 1440;

// Accepts "YYYY-MM-DD HH:MM", "YYYY-MM-DDTHH:MM" and an optional ":SS"
// suffix (seconds are truncated). Returns nullopt on anything else.
std::optional<EpochMinutes> parse_timestamp(std::string_view text);

// Canonical form "YYYY-MM-DD HH:MM".
std::string format_timestamp(EpochMinutes t);

// "YYYY-MM-DD" -> minutes at local midnight.
std::optional<EpochMinutes> parse_date(std::string_view text);
std::string format_date(EpochMinutes t);

// Day number since epoch (floor division, valid for negative times).
std::int64_t day_index(EpochMinutes t);

// Monday = 0 ... Sunday = 6.
int day_of_week(EpochMinutes t);

int hour_of_day(EpochMinutes t);

}  // namespace routefed
