#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "routefed/federate.hpp"
#include "routefed/ingestion.hpp"
#include "routefed/network.hpp"
#include "routefed/tensor.hpp"
#include "routefed/time.hpp"

namespace routefed {

// ---------------------------------------------------------------- calendar

class HolidayCalendar {
 public:
  void add(EpochMinutes day, std::string name);
  bool is_holiday(EpochMinutes t) const;
  std::size_t size() const { return names_.size(); }
  const std::map<std::int64_t, std::string>& entries() const { return names_; }

 private:
  std::map<std::int64_t, std::string> names_;  // day index -> name
};

// CSV `date,name`.
HolidayCalendar read_holiday_calendar(std::istream& in);
HolidayCalendar load_holiday_calendar(const std::string& path);
void write_holiday_calendar(std::ostream& out, const HolidayCalendar& calendar);

struct CalendarFeatures {
  int dayofweek = 0;  // Monday = 0
  int is_holiday = 0;
  int hour = 0;
};

CalendarFeatures calendar_features(EpochMinutes t, const HolidayCalendar& calendar);

// R = output_step / input_step; kNotDivisible unless it is a whole number.
int pooling_ratio(int input_step_minutes, int output_step_minutes);

// ---------------------------------------------------------------- groups

enum class GroupName { kTraffic, kSearchSpec, kSearchUnspec, kCalendar, kStatic };

std::string_view to_string(GroupName name);
std::optional<GroupName> group_from_string(std::string_view name);

// The static group is stored with time == 1 and step_minutes == 0; it is
// broadcast along time where it is consumed.
struct FeatureGroup {
  GroupName name = GroupName::kTraffic;
  EpochMinutes start = 0;
  int step_minutes = 0;
  std::vector<std::string> feature_names;
  Tensor3 data;

  bool is_static() const { return step_minutes == 0; }
};

struct Dataset {
  std::vector<std::string> segment_ids;
  EpochMinutes start = 0;
  int n_days = 0;
  int input_step = 5;
  int output_step = 60;
  std::vector<FeatureGroup> groups;
  // Target speed (km/h) at output granularity, segments x buckets, NaN if
  // missing.
  TimeGrid target_grid;
  std::vector<double> target;

  std::size_t segments() const { return segment_ids.size(); }
  const FeatureGroup* find(GroupName name) const;
  const FeatureGroup& group(GroupName name) const;
  double target_at(std::size_t k, std::size_t b) const {
    return target[k * target_grid.len + b];
  }
};

struct AssemblyOptions {
  int input_step = 5;
  int output_step = 60;
  int max_fill_gap = 3;  // longest traffic gap (buckets) filled by LOCF
};

struct AssemblyReport {
  std::size_t traffic_records_used = 0;
  std::size_t traffic_unknown_segment = 0;
  std::size_t traffic_outside_span = 0;
  std::size_t filled_buckets = 0;
  std::size_t missing_buckets = 0;  // still missing after filling
};

// Builds the five feature groups over [start, start + n_days):
//   traffic        (all_cars, speed, occ) at input_step
//   search_spec    time-specified counts at input_step
//   search_unspec  one channel per unspecified window at output_step
//   calendar       (dayofweek, is_holiday, hour) at output_step
//   static         (kp_index, degree_sum) per segment
// The time-specified series may be at any step that divides input_step; the
// unspecified series at any step that divides output_step.
Dataset assemble_dataset(const RoadGraph& graph, const std::vector<TrafficRecord>& traffic,
                         const CountSeries& search_spec,
                         const std::vector<CountSeries>& search_unspec,
                         const HolidayCalendar& calendar, EpochMinutes start, int n_days,
                         const AssemblyOptions& options = {},
                         AssemblyReport* report = nullptr);

// Last observation carried forward over gaps of at most max_gap NaNs;
// longer gaps stay NaN. Returns the number of filled entries.
std::size_t fill_short_gaps(std::vector<double>& series, int max_gap);

// ---------------------------------------------------------------- normalizer

inline constexpr double kStddevFloor = 1e-8;

struct NormalizerState {
  struct Channel {
    double mean = 0.0;
    double stddev = 1.0;
  };
  std::map<GroupName, std::vector<Channel>> inputs;
  double target_min = 0.0;
  double target_max = 1.0;
  EpochMinutes fit_start = 0;
  EpochMinutes fit_end = 0;
};

// Per-feature mean / population stddev of every input group over
// timestamps < fit_end, and min / max of the target over target buckets
// starting before fit_end. NaNs are ignored. Throws kEmptyInput if there is
// nothing to fit, kDegenerateTarget if min == max.
NormalizerState fit_normalizer(const Dataset& dataset, EpochMinutes fit_end);

// Standardized inputs and min-max scaled target; NaNs stay NaN.
Dataset apply_normalizer(const Dataset& dataset, const NormalizerState& state);
double normalize_target(const NormalizerState& state, double speed);
double invert_target(const NormalizerState& state, double normalized);

// ---------------------------------------------------------------- windows

struct WindowSpec {
  int input_size = 24 * 12;  // buckets at the dataset input step
  int n_day_interval = 0;
  int output_size = 24;      // buckets at the dataset output step

  void validate() const;
};

// Which groups feed the model. The static group is always included.
struct FeatureSelection {
  bool traffic = true;
  bool time = true;           // calendar group
  bool search = true;         // time-specified search
  bool search_unspec = true;

  static FeatureSelection all() { return {}; }
  static FeatureSelection parse(std::string_view comma_list);
  std::string to_string() const;
  std::vector<GroupName> groups() const;
  bool operator==(const FeatureSelection&) const = default;
};

struct Sample {
  EpochMinutes anchor = 0;        // end of the input span (exclusive)
  EpochMinutes input_start = 0;
  EpochMinutes target_start = 0;  // first target bucket
  int target_day = 0;             // day index relative to dataset start
  std::vector<GroupName> group_names;
  std::vector<Tensor3> inputs;    // one per selected group, time at own step
  std::vector<double> target;     // segments x output_size, row-major
};

struct WindowSet {
  std::vector<Sample> samples;
  std::size_t anchors = 0;
  std::size_t dropped_missing_input = 0;
  std::size_t dropped_missing_target = 0;
};

// Anchors are local midnights. Input covers input_size buckets ending at
// the anchor; the target is output_size buckets starting n_day_interval
// days after the anchor. Samples with missing values are dropped and
// counted. Throws kSpanTooShort if no anchor fits the dataset.
WindowSet build_windows(const Dataset& dataset, const WindowSpec& spec,
                        const FeatureSelection& selection);

// ---------------------------------------------------------------- persistence

// One CSV per group (`segment_id,bucket,<features>`), targets.csv, and a
// manifest.json with shapes, steps, feature names and, if given, the
// normalizer state.
void write_dataset(const Dataset& dataset, const std::string& dir,
                   const NormalizerState* normalizer = nullptr);
Dataset read_dataset(const std::string& dir,
                     std::optional<NormalizerState>* normalizer = nullptr);

std::string normalizer_to_json(const NormalizerState& state);
NormalizerState normalizer_from_json(const std::string& text);

}  // namespace routefed
