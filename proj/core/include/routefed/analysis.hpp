#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "routefed/federate.hpp"
#include "routefed/features.hpp"
#include "routefed/ingestion.hpp"

namespace routefed {

// Pearson correlation; NaN if either column is constant or the lengths
// differ or are < 2.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;          // n x n row-major, NaN where undefined
  std::vector<std::string> degenerate; // constant columns

  std::size_t size() const { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  double at(const std::string& a, const std::string& b) const;
};

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns);

// One row per (segment, input bucket) with complete traffic. Columns:
// dayofweek, is_holiday, hour, degree_sum, KP, OCC, allCars, speed,
// search_5min, search_1h, then search_unspec_<w>d per unspecified window.
// search_1h sums the time-specified counts over the containing hour.
struct AnalysisTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(const std::string& name) const;
};

// Needs the traffic, search_spec, search_unspec, calendar and static groups
// of an un-normalized dataset whose input step divides 60.
AnalysisTable analysis_table(const Dataset& dataset);

// Correlation between time-specified search counts and the speed residual
// left after removing each segment's mean speed per (time of day, weekday
// vs. weekend-or-holiday) profile.
double search_residual_correlation(const Dataset& dataset);

enum class DayType { kWeekday, kWeekend, kHoliday };
std::string_view to_string(DayType type);
DayType day_type(EpochMinutes t, const HolidayCalendar& calendar);

// Per-day search counts by day type (holiday wins over weekend), bucketed by
// the day of the search itself.
struct DayTypeStats {
  DayType type = DayType::kWeekday;
  SearchClass search_class = SearchClass::kTimeSpecified;
  std::size_t days = 0;
  double mean = 0.0, stddev = 0.0, min = 0.0, median = 0.0, max = 0.0;
};

std::vector<DayTypeStats> day_type_distribution(const std::vector<SearchRecord>& records,
                                                const HolidayCalendar& calendar,
                                                EpochMinutes start, int n_days);

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& matrix);
void write_day_type_csv(std::ostream& out, const std::vector<DayTypeStats>& stats);

}  // namespace routefed
