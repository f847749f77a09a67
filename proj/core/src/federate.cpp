#include "routefed/federate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {

void TimeGrid::validate() const {
  if (step_minutes <= 0 || 60 % step_minutes != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "grid step must divide 60, got " + std::to_string(step_minutes));
  }
  if (len == 0) throw Error(ErrorCode::kInvalidArgument, "grid length must be > 0");
}

std::optional<std::size_t> TimeGrid::bucket(double t) const {
  const double offset = t - static_cast<double>(start);
  if (!(offset >= 0.0)) return std::nullopt;
  const double b = std::floor(offset / step_minutes);
  if (b >= static_cast<double>(len)) return std::nullopt;
  return static_cast<std::size_t>(b);
}

SearchClass classify(const SearchRecord& record) {
  return (record.departure_time || record.arrival_time)
             ? SearchClass::kTimeSpecified
             : SearchClass::kNonTimeSpecified;
}

std::int64_t CountSeries::total() const {
  std::int64_t sum = 0;
  for (const auto c : counts) sum += c;
  return sum;
}

CountSeries& CountSeries::operator+=(const CountSeries& other) {
  if (!(grid == other.grid) || kind != other.kind || window_days != other.window_days ||
      segment_ids != other.segment_ids) {
    throw Error(ErrorCode::kShapeMismatch, "cannot merge count series of different shape");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

CountSeries make_empty_series(const RoadGraph& graph, const TimeGrid& grid,
                              SeriesKind kind, int window_days) {
  grid.validate();
  CountSeries s;
  s.grid = grid;
  s.kind = kind;
  s.window_days = window_days;
  s.segment_ids.reserve(graph.segment_count());
  for (const auto& seg : graph.segments()) s.segment_ids.push_back(seg.id);
  s.counts.assign(graph.segment_count() * grid.len, 0);
  return s;
}

namespace {

// Route lookups are repeated for the same IC pairs over and over.
class RouteCache {
 public:
  enum class Status { kOk, kUnknownNode, kNoRoute };

  struct Entry {
    Status status = Status::kOk;
    std::vector<Segment> route;
    std::vector<std::size_t> rows;  // graph segment index per route step
  };

  explicit RouteCache(const RoadGraph& graph) : graph_(graph) {}

  const Entry& get(const std::string& dep, const std::string& arr) {
    auto key = std::make_pair(dep, arr);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Entry e;
    if (!graph_.has_node(dep) || !graph_.has_node(arr)) {
      e.status = Status::kUnknownNode;
    } else {
      try {
        e.route = shortest_route(graph_, dep, arr);
        for (const auto& s : e.route) e.rows.push_back(*graph_.segment_index(s.id));
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNoRoute) throw;
        e.status = Status::kNoRoute;
      }
    }
    return cache_.emplace(std::move(key), std::move(e)).first->second;
  }

 private:
  const RoadGraph& graph_;
  std::map<std::pair<std::string, std::string>, Entry> cache_;
};

// Returns false (and bumps the report) if the record has no usable route.
const RouteCache::Entry* lookup(RouteCache& cache, const SearchRecord& r,
                                FederationReport& report) {
  const auto& e = cache.get(r.departure_ic, r.arrival_ic);
  switch (e.status) {
    case RouteCache::Status::kUnknownNode: ++report.unknown_node; return nullptr;
    case RouteCache::Status::kNoRoute: ++report.no_route; return nullptr;
    case RouteCache::Status::kOk: break;
  }
  if (e.route.empty()) {
    ++report.empty_route;
    return nullptr;
  }
  return &e;
}

// floor(a / b) for b > 0.
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

}  // namespace

TimeSpecifiedResult accumulate_time_specified(const std::vector<SearchRecord>& records,
                                              const RoadGraph& graph, const TimeGrid& grid,
                                              double speed_kmh) {
  TimeSpecifiedResult out{make_empty_series(graph, grid, SeriesKind::kTimeSpecified), {}};
  RouteCache cache(graph);
  auto& report = out.report;
  for (const auto& r : records) {
    if (classify(r) != SearchClass::kTimeSpecified) {
      throw Error(ErrorCode::kInvalidArgument,
                  "accumulate_time_specified: record without departure/arrival time");
    }
    ++report.records;
    const auto* entry = lookup(cache, r, report);
    if (entry == nullptr) continue;
    const bool by_departure = r.departure_time.has_value();
    const double anchor =
        static_cast<double>(by_departure ? *r.departure_time : *r.arrival_time);
    const auto passages =
        passage_times(entry->route, anchor,
                      by_departure ? AnchorKind::kDeparture : AnchorKind::kArrival,
                      speed_kmh);
    std::int64_t added = 0;
    for (std::size_t i = 0; i < passages.size(); ++i) {
      const auto b = grid.bucket(passages[i].enter);
      if (!b) continue;
      ++out.series.at(entry->rows[i], *b);
      ++added;
    }
    if (added == 0) {
      ++report.outside_grid;
    } else {
      ++report.contributed;
      report.increments += added;
    }
  }
  return out;
}

UnspecifiedResult accumulate_unspecified(const std::vector<SearchRecord>& records,
                                         const RoadGraph& graph, const TimeGrid& grid,
                                         const std::vector<int>& windows_days) {
  grid.validate();
  for (const int w : windows_days) {
    if (w <= 0) throw Error(ErrorCode::kInvalidArgument, "window days must be > 0");
  }
  const std::size_t n_seg = graph.segment_count();
  const std::size_t len = grid.len;
  const std::int64_t step = grid.step_minutes;

  // One difference array per window; each record adds a bucket interval to
  // every segment on its route.
  std::vector<std::vector<std::int64_t>> diff(
      windows_days.size(), std::vector<std::int64_t>(n_seg * (len + 1), 0));

  UnspecifiedResult out;
  auto& report = out.report;
  RouteCache cache(graph);
  for (const auto& r : records) {
    if (classify(r) != SearchClass::kNonTimeSpecified) {
      throw Error(ErrorCode::kInvalidArgument,
                  "accumulate_unspecified: record has a departure/arrival time");
    }
    ++report.records;
    const auto* entry = lookup(cache, r, report);
    if (entry == nullptr) continue;
    bool any = false;
    for (std::size_t wi = 0; wi < windows_days.size(); ++wi) {
      const std::int64_t window = windows_days[wi] * kMinutesPerDay;
      // t_b > search_time  and  t_b <= search_time + window
      std::int64_t lo = floor_div(r.search_time - grid.start, step) + 1;
      std::int64_t hi = floor_div(r.search_time + window - grid.start, step);
      lo = std::max<std::int64_t>(lo, 0);
      hi = std::min<std::int64_t>(hi, static_cast<std::int64_t>(len) - 1);
      if (lo > hi) continue;
      any = true;
      auto& d = diff[wi];
      for (const std::size_t row : entry->rows) {
        d[row * (len + 1) + static_cast<std::size_t>(lo)] += 1;
        d[row * (len + 1) + static_cast<std::size_t>(hi) + 1] -= 1;
        report.increments += hi - lo + 1;
      }
    }
    if (any) {
      ++report.contributed;
    } else {
      ++report.outside_grid;
    }
  }

  out.series.reserve(windows_days.size());
  for (std::size_t wi = 0; wi < windows_days.size(); ++wi) {
    auto s = make_empty_series(graph, grid, SeriesKind::kUnspecified, windows_days[wi]);
    const auto& d = diff[wi];
    for (std::size_t row = 0; row < n_seg; ++row) {
      std::int64_t running = 0;
      for (std::size_t b = 0; b < len; ++b) {
        running += d[row * (len + 1) + b];
        s.at(row, b) = running;
      }
    }
    out.series.push_back(std::move(s));
  }
  return out;
}

CountSeries resample_sum(const CountSeries& series, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::kInvalidArgument, "resample factor must be > 0");
  const std::size_t new_len = series.grid.len / factor;
  if (new_len == 0) throw Error(ErrorCode::kSpanTooShort, "series shorter than one bucket");
  CountSeries out;
  out.grid = {series.grid.start,
              series.grid.step_minutes * static_cast<int>(factor), new_len};
  out.kind = series.kind;
  out.window_days = series.window_days;
  out.segment_ids = series.segment_ids;
  out.counts.assign(out.rows() * new_len, 0);
  for (std::size_t s = 0; s < out.rows(); ++s) {
    for (std::size_t b = 0; b < new_len * factor; ++b) {
      out.at(s, b / factor) += series.at(s, b);
    }
  }
  return out;
}

std::string series_basename(const CountSeries& series) {
  if (series.kind == SeriesKind::kUnspecified) {
    return "search_unspec_" + std::to_string(series.window_days) + "d";
  }
  const int step = series.grid.step_minutes;
  return step % 60 == 0 ? "search_spec_" + std::to_string(step / 60) + "h"
                        : "search_spec_" + std::to_string(step) + "min";
}

void write_count_series(const CountSeries& series, const std::string& csv_path,
                        const std::string& sidecar_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + csv_path);
  out << "segment_id";
  for (std::size_t b = 0; b < series.grid.len; ++b) out << ",bucket_" << b;
  out << '\n';
  for (std::size_t s = 0; s < series.rows(); ++s) {
    out << csv::escape(series.segment_ids[s]);
    for (std::size_t b = 0; b < series.grid.len; ++b) out << ',' << series.at(s, b);
    out << '\n';
  }

  nlohmann::ordered_json j;
  j["kind"] = series.kind == SeriesKind::kTimeSpecified ? "time_specified" : "unspecified";
  if (series.kind == SeriesKind::kUnspecified) {
    j["window_days"] = series.window_days;
  } else {
    j["window_days"] = nullptr;
  }
  j["start"] = format_timestamp(series.grid.start);
  j["step_minutes"] = series.grid.step_minutes;
  j["len"] = series.grid.len;
  std::ofstream side(sidecar_path);
  if (!side) throw Error(ErrorCode::kIo, "cannot write " + sidecar_path);
  side << j.dump(2) << '\n';
}

CountSeries read_count_series(const std::string& csv_path, const std::string& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw Error(ErrorCode::kIo, "cannot open " + sidecar_path);
  CountSeries s;
  try {
    const auto j = nlohmann::json::parse(side);
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "time_specified") {
      s.kind = SeriesKind::kTimeSpecified;
    } else if (kind == "unspecified") {
      s.kind = SeriesKind::kUnspecified;
      s.window_days = j.at("window_days").get<int>();
    } else {
      throw Error(ErrorCode::kParse, "unknown series kind " + kind);
    }
    const auto start = parse_timestamp(j.at("start").get<std::string>());
    if (!start) throw Error(ErrorCode::kParse, "bad start timestamp in " + sidecar_path);
    s.grid = {*start, j.at("step_minutes").get<int>(), j.at("len").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, sidecar_path + ": " + e.what());
  }
  s.grid.validate();

  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, csv_path + ": empty");
  const auto header = csv::split_line(csv::chomp(line));
  if (header.size() != s.grid.len + 1 || header[0] != "segment_id") {
    throw Error(ErrorCode::kParse, csv_path + ": header does not match sidecar length");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::chomp(line);
    if (text.empty()) continue;
    const auto f = csv::split_line(text);
    if (f.size() != s.grid.len + 1) {
      throw Error(ErrorCode::kParse, csv_path + " line " + std::to_string(line_no) +
                                         ": wrong field count");
    }
    s.segment_ids.push_back(f[0]);
    for (std::size_t b = 1; b < f.size(); ++b) {
      const auto v = csv::parse_int(f[b]);
      if (!v || *v < 0) {
        throw Error(ErrorCode::kParse, csv_path + " line " + std::to_string(line_no) +
                                           ": counts must be non-negative integers");
      }
      s.counts.push_back(*v);
    }
  }
  return s;
}

}  // namespace routefed
