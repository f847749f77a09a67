#include "routefed/ingestion.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <utility>

#include <json.hpp>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {
namespace {

void read_header(std::istream& in, std::string_view expected) {
  std::string line;
  if (!std::getline(in, line)) {
    if (in.bad()) throw Error(ErrorCode::kIo, "read failure");
    throw Error(ErrorCode::kParse, "empty input, expected header");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  if (csv::chomp(line) != expected) {
    throw Error(ErrorCode::kParse,
                "bad header '" + line + "', expected '" + std::string(expected) + "'");
  }
}

// Per-line parse: either a record or a reject reason.
template <typename Record>
struct LineResult {
  std::optional<Record> record;
  std::string reason;
};

LineResult<SearchRecord> parse_search_line(std::string_view text) {
  const auto f = csv::split_line(text);
  if (f.size() != 5) {
    return {std::nullopt, "FieldCount: expected 5 fields, got " + std::to_string(f.size())};
  }
  SearchRecord r;
  if (f[0].empty()) return {std::nullopt, "MissingField: search_time"};
  if (f[1].empty()) return {std::nullopt, "MissingField: departure_ic"};
  if (f[2].empty()) return {std::nullopt, "MissingField: arrival_ic"};
  const auto st = parse_timestamp(f[0]);
  if (!st) return {std::nullopt, "BadTimestamp: search_time"};
  r.search_time = *st;
  r.departure_ic = f[1];
  r.arrival_ic = f[2];
  if (!f[3].empty()) {
    const auto t = parse_timestamp(f[3]);
    if (!t) return {std::nullopt, "BadTimestamp: departure_time"};
    r.departure_time = *t;
  }
  if (!f[4].empty()) {
    const auto t = parse_timestamp(f[4]);
    if (!t) return {std::nullopt, "BadTimestamp: arrival_time"};
    r.arrival_time = *t;
  }
  if (r.departure_time && r.arrival_time && *r.departure_time > *r.arrival_time) {
    return {std::nullopt, "TimeOrder: departure_time after arrival_time"};
  }
  return {std::move(r), {}};
}

LineResult<TrafficRecord> parse_traffic_line(std::string_view text) {
  const auto f = csv::split_line(text);
  if (f.size() != 5) {
    return {std::nullopt, "FieldCount: expected 5 fields, got " + std::to_string(f.size())};
  }
  TrafficRecord r;
  if (f[0].empty()) return {std::nullopt, "MissingField: segment_id"};
  r.segment_id = f[0];
  const auto ts = parse_timestamp(f[1]);
  if (!ts) return {std::nullopt, "BadTimestamp: timestamp"};
  if (*ts % kTrafficStepMinutes != 0) {
    return {std::nullopt, "Misaligned: timestamp not on the 5-minute grid"};
  }
  r.timestamp = *ts;
  const auto cars = csv::parse_int(f[2]);
  if (!cars) return {std::nullopt, "BadNumber: all_cars"};
  if (*cars < 0) return {std::nullopt, "OutOfRange: all_cars"};
  r.all_cars = *cars;
  const auto speed = csv::parse_double(f[3]);
  if (!speed) return {std::nullopt, "BadNumber: speed"};
  if (*speed < 0.0) return {std::nullopt, "OutOfRange: speed"};
  r.speed = *speed;
  const auto occ = csv::parse_double(f[4]);
  if (!occ) return {std::nullopt, "BadNumber: occ"};
  if (*occ < 0.0 || *occ > 1.0) return {std::nullopt, "OutOfRange: occ"};
  r.occ = *occ;
  return {std::move(r), {}};
}

template <typename Record, typename LineParser, typename Accept>
ParsedLog<Record> parse_lines(std::istream& in, std::string_view header,
                              LineParser parse_line, Accept accept) {
  read_header(in, header);
  ParsedLog<Record> out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    ++out.data_lines;
    const auto text = csv::chomp(line);
    if (text.empty()) {
      out.rejects.push_back({line_no, "Empty: blank line"});
      continue;
    }
    auto result = parse_line(text);
    if (!result.record) {
      out.rejects.push_back({line_no, std::move(result.reason)});
      continue;
    }
    std::string why;
    if (!accept(*result.record, why)) {
      out.rejects.push_back({line_no, std::move(why)});
      continue;
    }
    out.records.push_back(std::move(*result.record));
  }
  if (in.bad()) throw Error(ErrorCode::kIo, "read failure");
  return out;
}

std::string opt_time(const std::optional<EpochMinutes>& t) {
  return t ? format_timestamp(*t) : std::string();
}

}  // namespace

SearchLog parse_search_log(std::istream& in) {
  return parse_lines<SearchRecord>(in, kSearchLogHeader, parse_search_line,
                                   [](const SearchRecord&, std::string&) { return true; });
}

TrafficLog parse_traffic_log(std::istream& in) {
  std::set<std::pair<std::string, EpochMinutes>> seen;
  return parse_lines<TrafficRecord>(
      in, kTrafficLogHeader, parse_traffic_line,
      [&seen](const TrafficRecord& r, std::string& why) {
        if (!seen.emplace(r.segment_id, r.timestamp).second) {
          why = "Duplicate: (segment_id, timestamp) already seen";
          return false;
        }
        return true;
      });
}

SearchLog load_search_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse_search_log(in);
}

TrafficLog load_traffic_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse_traffic_log(in);
}

void write_search_log(std::ostream& out, const std::vector<SearchRecord>& records) {
  out << kSearchLogHeader << '\n';
  for (const auto& r : records) {
    out << format_timestamp(r.search_time) << ',' << csv::escape(r.departure_ic)
        << ',' << csv::escape(r.arrival_ic) << ',' << opt_time(r.departure_time)
        << ',' << opt_time(r.arrival_time) << '\n';
  }
}

void write_traffic_log(std::ostream& out, const std::vector<TrafficRecord>& records) {
  out << kTrafficLogHeader << '\n';
  for (const auto& r : records) {
    out << csv::escape(r.segment_id) << ',' << format_timestamp(r.timestamp) << ','
        << r.all_cars << ',' << csv::format_double(r.speed) << ','
        << csv::format_double(r.occ) << '\n';
  }
}

void write_rejects_jsonl(std::ostream& out, const std::vector<Reject>& rejects) {
  for (const auto& r : rejects) {
    nlohmann::ordered_json j;
    j["line"] = r.line;
    j["reason"] = r.reason;
    out << j.dump() << '\n';
  }
}

}  // namespace routefed
