#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace routefed::csv {

// Splits one line on commas. Double-quoted fields may contain commas and
// escaped quotes ("").
std::vector<std::string> split_line(std::string_view line);

// Quotes a field only if it contains a comma, quote or newline.
std::string escape(std::string_view field);

// Shortest decimal representation that round-trips.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Strips a trailing '\r'.
std::string_view chomp(std::string_view line);

}  // namespace routefed::csv
