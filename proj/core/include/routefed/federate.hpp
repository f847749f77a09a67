#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "routefed/ingestion.hpp"
#include "routefed/network.hpp"
#include "routefed/time.hpp"

namespace routefed {

inline constexpr int kDefaultSearchStepMinutes = 5;
inline const std::vector<int> kDefaultUnspecifiedWindows = {1, 3, 7, 10};

struct TimeGrid {
  EpochMinutes start = 0;
  int step_minutes = kDefaultSearchStepMinutes;
  std::size_t len = 0;

  // Throws kInvalidArgument unless step divides 60 and len > 0.
  void validate() const;

  EpochMinutes bucket_start(std::size_t b) const {
    return start + static_cast<EpochMinutes>(b) * step_minutes;
  }
  EpochMinutes end() const { return bucket_start(len); }

  // Bucket of a (fractional) time, or nullopt outside [start, end).
  std::optional<std::size_t> bucket(double t) const;

  bool operator==(const TimeGrid&) const = default;
};

enum class SearchClass { kTimeSpecified, kNonTimeSpecified };

SearchClass classify(const SearchRecord& record);

enum class SeriesKind { kTimeSpecified, kUnspecified };

// segments x len matrix of accumulated search counts, one row per graph
// segment in graph order.
struct CountSeries {
  TimeGrid grid;
  SeriesKind kind = SeriesKind::kTimeSpecified;
  int window_days = 0;  // unspecified series only
  std::vector<std::string> segment_ids;
  std::vector<std::int64_t> counts;

  std::size_t rows() const { return segment_ids.size(); }
  std::int64_t& at(std::size_t seg, std::size_t b) { return counts[seg * grid.len + b]; }
  std::int64_t at(std::size_t seg, std::size_t b) const {
    return counts[seg * grid.len + b];
  }
  std::int64_t total() const;

  // Elementwise sum of partial results over the same grid/segments.
  CountSeries& operator+=(const CountSeries& other);
  bool operator==(const CountSeries&) const = default;
};

CountSeries make_empty_series(const RoadGraph& graph, const TimeGrid& grid,
                              SeriesKind kind, int window_days = 0);

// What happened to the records that did not contribute.
struct FederationReport {
  std::size_t records = 0;
  std::size_t contributed = 0;      // added at least one count
  std::size_t unknown_node = 0;     // IC not in the loaded graph (clipped)
  std::size_t no_route = 0;
  std::size_t empty_route = 0;      // departure IC == arrival IC
  std::size_t outside_grid = 0;     // projected entirely outside the grid
  std::int64_t increments = 0;      // total +1s applied (per series summed)
};

struct TimeSpecifiedResult {
  CountSeries series;
  FederationReport report;
};

struct UnspecifiedResult {
  std::vector<CountSeries> series;  // one per window, in request order
  FederationReport report;
};

// Each record's shortest route is projected from its anchor (departure wins
// when both times are set) and every segment gets +1 in the bucket of its
// enter time. Throws kInvalidArgument if a record is not time-specified.
TimeSpecifiedResult accumulate_time_specified(const std::vector<SearchRecord>& records,
                                              const RoadGraph& graph, const TimeGrid& grid,
                                              double speed_kmh = kDefaultSpeedKmh);

// Bucket b of the w-day series counts searches with
// search_time in [t_b - w days, t_b), t_b = grid.bucket_start(b), on every
// segment of the searched route.
UnspecifiedResult accumulate_unspecified(const std::vector<SearchRecord>& records,
                                         const RoadGraph& graph, const TimeGrid& grid,
                                         const std::vector<int>& windows_days =
                                             kDefaultUnspecifiedWindows);

// Sums `factor` consecutive buckets; a trailing remainder is dropped.
CountSeries resample_sum(const CountSeries& series, std::size_t factor);

// Persistence: CSV matrix `segment_id,bucket_0,...` plus a JSON sidecar
// {kind, window_days, start, step_minutes, len}.
void write_count_series(const CountSeries& series, const std::string& csv_path,
                        const std::string& sidecar_path);
CountSeries read_count_series(const std::string& csv_path, const std::string& sidecar_path);

std::string series_basename(const CountSeries& series);

}  // namespace routefed
