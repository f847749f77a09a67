#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "routefed/time.hpp"

namespace routefed {

inline constexpr std::string_view kSearchLogHeader =
    "search_time,departure_ic,arrival_ic,departure_time,arrival_time";
inline constexpr std::string_view kTrafficLogHeader =
    "segment_id,timestamp,all_cars,speed,occ";
inline constexpr int kTrafficStepMinutes = 5;

struct SearchRecord {
  std::string departure_ic;
  std::string arrival_ic;
  std::optional<EpochMinutes> departure_time;
  std::optional<EpochMinutes> arrival_time;
  EpochMinutes search_time = 0;

  bool operator==(const SearchRecord&) const = default;
};

struct TrafficRecord {
  std::string segment_id;
  EpochMinutes timestamp = 0;  // start of a 5-minute interval
  std::int64_t all_cars = 0;
  double speed = 0.0;  // km/h
  double occ = 0.0;    // fraction in [0, 1]

  bool operator==(const TrafficRecord&) const = default;
};

struct Reject {
  std::size_t line = 0;  // 1-based physical line, header is line 1
  std::string reason;
};

template <typename Record>
struct ParsedLog {
  std::vector<Record> records;
  std::vector<Reject> rejects;
  std::size_t data_lines = 0;  // lines after the header
};

using SearchLog = ParsedLog<SearchRecord>;
using TrafficLog = ParsedLog<TrafficRecord>;

// Malformed lines become rejects; a missing or wrong header, or a stream
// error, throws (kParse / kIo).
SearchLog parse_search_log(std::istream& in);
TrafficLog parse_traffic_log(std::istream& in);

SearchLog load_search_log(const std::string& path);
TrafficLog load_traffic_log(const std::string& path);

// Canonical serializations; parse(write(x)) == x and write(parse(f)) == f
// for files already in canonical form.
void write_search_log(std::ostream& out, const std::vector<SearchRecord>& records);
void write_traffic_log(std::ostream& out, const std::vector<TrafficRecord>& records);

// One JSON object per line: {"line": n, "reason": "..."}.
void write_rejects_jsonl(std::ostream& out, const std::vector<Reject>& rejects);

}  // namespace routefed
