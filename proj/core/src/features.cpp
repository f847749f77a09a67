#include "routefed/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------- calendar

void HolidayCalendar::add(EpochMinutes day, std::string name) {
  names_[day_index(day)] = std::move(name);
}

bool HolidayCalendar::is_holiday(EpochMinutes t) const {
  return names_.contains(day_index(t));
}

HolidayCalendar read_holiday_calendar(std::istream& in) {
  HolidayCalendar cal;
  std::string line;
  if (!std::getline(in, line) || csv::chomp(line) != "date,name") {
    throw Error(ErrorCode::kParse, "holiday calendar: expected header 'date,name'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = csv::chomp(line);
    if (text.empty()) continue;
    const auto f = csv::split_line(text);
    const auto day = f.empty() ? std::nullopt : parse_date(f[0]);
    if (f.size() != 2 || !day) {
      throw Error(ErrorCode::kParse,
                  "holiday calendar line " + std::to_string(line_no) + ": expected date,name");
    }
    cal.add(*day, f[1]);
  }
  return cal;
}

HolidayCalendar load_holiday_calendar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_holiday_calendar(in);
}

void write_holiday_calendar(std::ostream& out, const HolidayCalendar& calendar) {
  out << "date,name\n";
  for (const auto& [day, name] : calendar.entries()) {
    out << format_date(day * kMinutesPerDay) << ',' << csv::escape(name) << '\n';
  }
}

CalendarFeatures calendar_features(EpochMinutes t, const HolidayCalendar& calendar) {
  return {day_of_week(t), calendar.is_holiday(t) ? 1 : 0, hour_of_day(t)};
}

int pooling_ratio(int input_step_minutes, int output_step_minutes) {
  if (input_step_minutes <= 0 || output_step_minutes <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "time steps must be positive");
  }
  if (output_step_minutes % input_step_minutes != 0) {
    throw Error(ErrorCode::kNotDivisible,
                "output step " + std::to_string(output_step_minutes) +
                    " is not a multiple of input step " + std::to_string(input_step_minutes));
  }
  return output_step_minutes / input_step_minutes;
}

// ---------------------------------------------------------------- groups

std::string_view to_string(GroupName name) {
  switch (name) {
    case GroupName::kTraffic: return "traffic";
    case GroupName::kSearchSpec: return "search_spec";
    case GroupName::kSearchUnspec: return "search_unspec";
    case GroupName::kCalendar: return "calendar";
    case GroupName::kStatic: return "static";
  }
  return "unknown";
}

std::optional<GroupName> group_from_string(std::string_view name) {
  for (const auto g : {GroupName::kTraffic, GroupName::kSearchSpec, GroupName::kSearchUnspec,
                       GroupName::kCalendar, GroupName::kStatic}) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

const FeatureGroup* Dataset::find(GroupName name) const {
  for (const auto& g : groups) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

const FeatureGroup& Dataset::group(GroupName name) const {
  const auto* g = find(name);
  if (g == nullptr) {
    throw Error(ErrorCode::kShapeMismatch,
                "dataset has no group " + std::string(to_string(name)));
  }
  return *g;
}

std::size_t fill_short_gaps(std::vector<double>& series, int max_gap) {
  std::size_t filled = 0;
  std::size_t i = 0;
  const std::size_t n = series.size();
  while (i < n) {
    if (!std::isnan(series[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && std::isnan(series[j])) ++j;
    // A gap at the very start has nothing to carry forward.
    if (i > 0 && j - i <= static_cast<std::size_t>(std::max(max_gap, 0))) {
      for (std::size_t k = i; k < j; ++k) series[k] = series[i - 1];
      filled += j - i;
    }
    i = j;
  }
  return filled;
}

namespace {

// Aligns a count series onto `n` buckets of `step` minutes from `start`,
// in the row order of `segment_ids`.
Tensor3 align_counts(const CountSeries& series, const std::vector<std::string>& segment_ids,
                     EpochMinutes start, int step, std::size_t n, std::string_view what) {
  const int src_step = series.grid.step_minutes;
  if (step % src_step != 0) {
    throw Error(ErrorCode::kNotDivisible, std::string(what) + ": series step " +
                                              std::to_string(src_step) +
                                              " does not divide " + std::to_string(step));
  }
  const std::size_t factor = static_cast<std::size_t>(step / src_step);
  const EpochMinutes offset = start - series.grid.start;
  if (offset < 0 || offset % src_step != 0 ||
      static_cast<std::size_t>(offset / src_step) + n * factor > series.grid.len) {
    throw Error(ErrorCode::kSpanTooShort,
                std::string(what) + ": count series does not cover the dataset span");
  }
  const std::size_t first = static_cast<std::size_t>(offset / src_step);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < series.rows(); ++r) row_of[series.segment_ids[r]] = r;

  Tensor3 out(segment_ids.size(), n, 1);
  for (std::size_t k = 0; k < segment_ids.size(); ++k) {
    const auto it = row_of.find(segment_ids[k]);
    if (it == row_of.end()) {
      throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": series has no row for " +
                                                 segment_ids[k]);
    }
    for (std::size_t b = 0; b < n * factor; ++b) {
      out.at(k, b / factor, 0) += static_cast<double>(series.at(it->second, first + b));
    }
  }
  return out;
}

}  // namespace

Dataset assemble_dataset(const RoadGraph& graph, const std::vector<TrafficRecord>& traffic,
                         const CountSeries& search_spec,
                         const std::vector<CountSeries>& search_unspec,
                         const HolidayCalendar& calendar, EpochMinutes start, int n_days,
                         const AssemblyOptions& options, AssemblyReport* report) {
  if (n_days <= 0) throw Error(ErrorCode::kInvalidArgument, "n_days must be > 0");
  if (start % kMinutesPerDay != 0) {
    throw Error(ErrorCode::kInvalidArgument, "dataset start must be a local midnight");
  }
  const int in_step = options.input_step;
  const int out_step = options.output_step;
  if (in_step % kTrafficStepMinutes != 0) {
    throw Error(ErrorCode::kNotDivisible, "input step must be a multiple of 5 minutes");
  }
  pooling_ratio(in_step, out_step);
  if (kMinutesPerDay % out_step != 0) {
    throw Error(ErrorCode::kNotDivisible, "output step must divide one day");
  }

  AssemblyReport local_report;
  AssemblyReport& rep = report ? *report : local_report;
  rep = {};

  Dataset ds;
  ds.start = start;
  ds.n_days = n_days;
  ds.input_step = in_step;
  ds.output_step = out_step;
  for (const auto& s : graph.segments()) ds.segment_ids.push_back(s.id);
  const std::size_t K = ds.segments();
  const std::size_t span = static_cast<std::size_t>(n_days) * kMinutesPerDay;
  const std::size_t n5 = span / kTrafficStepMinutes;
  const std::size_t n_in = span / in_step;
  const std::size_t n_out = span / out_step;

  // Raw 5-minute traffic, then short-gap filling per segment and channel.
  std::vector<std::vector<double>> raw(K * 3, std::vector<double>(n5, kNaN));
  for (const auto& r : traffic) {
    const auto k = graph.segment_index(r.segment_id);
    if (!k) {
      ++rep.traffic_unknown_segment;
      continue;
    }
    if (r.timestamp < start || r.timestamp >= start + static_cast<EpochMinutes>(span)) {
      ++rep.traffic_outside_span;
      continue;
    }
    const std::size_t b = static_cast<std::size_t>((r.timestamp - start) / kTrafficStepMinutes);
    raw[*k * 3 + 0][b] = static_cast<double>(r.all_cars);
    raw[*k * 3 + 1][b] = r.speed;
    raw[*k * 3 + 2][b] = r.occ;
    ++rep.traffic_records_used;
  }
  for (auto& ch : raw) {
    rep.filled_buckets += fill_short_gaps(ch, options.max_fill_gap);
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t b = 0; b < n5; ++b) rep.missing_buckets += std::isnan(raw[k * 3][b]);
  }

  FeatureGroup traffic_group{GroupName::kTraffic, start, in_step,
                             {"all_cars", "speed", "occ"}, Tensor3(K, n_in, 3, kNaN)};
  const std::size_t in_factor = static_cast<std::size_t>(in_step / kTrafficStepMinutes);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < n_in; ++t) {
      double cars = 0.0, speed = 0.0, occ = 0.0;
      for (std::size_t j = 0; j < in_factor; ++j) {
        const std::size_t b = t * in_factor + j;
        cars += raw[k * 3 + 0][b];
        speed += raw[k * 3 + 1][b];
        occ += raw[k * 3 + 2][b];
      }
      traffic_group.data.at(k, t, 0) = cars;
      traffic_group.data.at(k, t, 1) = speed / static_cast<double>(in_factor);
      traffic_group.data.at(k, t, 2) = occ / static_cast<double>(in_factor);
    }
  }

  ds.target_grid = {start, out_step, n_out};
  ds.target.assign(K * n_out, kNaN);
  const std::size_t out_factor = static_cast<std::size_t>(out_step / kTrafficStepMinutes);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < n_out; ++t) {
      double sum = 0.0;
      for (std::size_t j = 0; j < out_factor; ++j) sum += raw[k * 3 + 1][t * out_factor + j];
      ds.target[k * n_out + t] = sum / static_cast<double>(out_factor);
    }
  }

  FeatureGroup spec_group{GroupName::kSearchSpec, start, in_step, {series_basename(search_spec)},
                          align_counts(search_spec, ds.segment_ids, start, in_step, n_in,
                                       "search_spec")};
  spec_group.feature_names = {"search_spec"};

  FeatureGroup unspec_group{GroupName::kSearchUnspec, start, out_step, {},
                            Tensor3(K, n_out, search_unspec.size())};
  for (std::size_t w = 0; w < search_unspec.size(); ++w) {
    const auto& s = search_unspec[w];
    unspec_group.feature_names.push_back("search_unspec_" + std::to_string(s.window_days) + "d");
    const Tensor3 aligned = align_counts(s, ds.segment_ids, start, out_step, n_out,
                                         "search_unspec");
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < n_out; ++t) unspec_group.data.at(k, t, w) = aligned.at(k, t, 0);
    }
  }
  if (search_unspec.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "at least one unspecified-search window required");
  }

  FeatureGroup cal_group{GroupName::kCalendar, start, out_step,
                         {"dayofweek", "is_holiday", "hour"}, Tensor3(K, n_out, 3)};
  for (std::size_t t = 0; t < n_out; ++t) {
    const auto c = calendar_features(start + static_cast<EpochMinutes>(t) * out_step, calendar);
    for (std::size_t k = 0; k < K; ++k) {
      cal_group.data.at(k, t, 0) = c.dayofweek;
      cal_group.data.at(k, t, 1) = c.is_holiday;
      cal_group.data.at(k, t, 2) = c.hour;
    }
  }

  FeatureGroup static_group{GroupName::kStatic, start, 0, {"kp_index", "degree_sum"},
                            Tensor3(K, 1, 2)};
  for (std::size_t k = 0; k < K; ++k) {
    const auto& seg = graph.segments()[k];
    static_group.data.at(k, 0, 0) = seg.kp_index;
    static_group.data.at(k, 0, 1) = static_cast<double>(degree_sum(graph, seg.from_ic) +
                                                        degree_sum(graph, seg.to_ic));
  }

  ds.groups.push_back(std::move(traffic_group));
  ds.groups.push_back(std::move(spec_group));
  ds.groups.push_back(std::move(unspec_group));
  ds.groups.push_back(std::move(cal_group));
  ds.groups.push_back(std::move(static_group));
  return ds;
}

// ---------------------------------------------------------------- normalizer

namespace {

// Welford running moments.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double stddev() const { return n ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

}  // namespace

NormalizerState fit_normalizer(const Dataset& dataset, EpochMinutes fit_end) {
  NormalizerState state;
  state.fit_start = dataset.start;
  state.fit_end = fit_end;
  if (fit_end <= dataset.start) {
    throw Error(ErrorCode::kEmptyInput, "normalizer fit span is empty");
  }
  for (const auto& g : dataset.groups) {
    std::vector<Moments> m(g.data.features);
    std::size_t t_end = g.data.time;
    if (!g.is_static()) {
      const EpochMinutes avail = std::max<EpochMinutes>(0, fit_end - g.start);
      t_end = std::min<std::size_t>(g.data.time,
                                    static_cast<std::size_t>((avail + g.step_minutes - 1) /
                                                             g.step_minutes));
    }
    for (std::size_t k = 0; k < g.data.segments; ++k) {
      for (std::size_t t = 0; t < t_end; ++t) {
        for (std::size_t f = 0; f < g.data.features; ++f) {
          const double x = g.data.at(k, t, f);
          if (!std::isnan(x)) m[f].add(x);
        }
      }
    }
    auto& channels = state.inputs[g.name];
    for (const auto& mf : m) {
      if (mf.n == 0) {
        throw Error(ErrorCode::kEmptyInput, "no training values for group " +
                                                std::string(to_string(g.name)));
      }
      channels.push_back({mf.mean, std::max(mf.stddev(), kStddevFloor)});
    }
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const auto& tg = dataset.target_grid;
  for (std::size_t k = 0; k < dataset.segments(); ++k) {
    for (std::size_t b = 0; b < tg.len && tg.bucket_start(b) < fit_end; ++b) {
      const double y = dataset.target_at(k, b);
      if (std::isnan(y)) continue;
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (!(lo <= hi)) throw Error(ErrorCode::kEmptyInput, "no training target values");
  if (lo == hi) {
    throw Error(ErrorCode::kDegenerateTarget, "target min equals max; cannot min-max scale");
  }
  state.target_min = lo;
  state.target_max = hi;
  return state;
}

Dataset apply_normalizer(const Dataset& dataset, const NormalizerState& state) {
  Dataset out = dataset;
  for (auto& g : out.groups) {
    const auto it = state.inputs.find(g.name);
    if (it == state.inputs.end() || it->second.size() != g.data.features) {
      throw Error(ErrorCode::kShapeMismatch, "normalizer does not cover group " +
                                                 std::string(to_string(g.name)));
    }
    const auto& ch = it->second;
    for (std::size_t i = 0; i < g.data.data.size(); ++i) {
      const auto& c = ch[i % g.data.features];
      g.data.data[i] = (g.data.data[i] - c.mean) / c.stddev;
    }
  }
  for (auto& y : out.target) y = normalize_target(state, y);
  return out;
}

double normalize_target(const NormalizerState& state, double speed) {
  return (speed - state.target_min) / (state.target_max - state.target_min);
}

double invert_target(const NormalizerState& state, double normalized) {
  return state.target_min + normalized * (state.target_max - state.target_min);
}

// ---------------------------------------------------------------- windows

void WindowSpec::validate() const {
  if (input_size <= 0 || output_size <= 0 || n_day_interval < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "window spec needs input_size > 0, output_size > 0, n_day_interval >= 0");
  }
}

FeatureSelection FeatureSelection::parse(std::string_view comma_list) {
  FeatureSelection s{false, false, false, false};
  for (const auto& item : csv::split_line(comma_list)) {
    if (item == "traffic") {
      s.traffic = true;
    } else if (item == "time") {
      s.time = true;
    } else if (item == "search") {
      s.search = true;
    } else if (item == "search_unspec") {
      s.search_unspec = true;
    } else if (!item.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown feature group '" + item + "'");
    }
  }
  if (!s.traffic && !s.time && !s.search && !s.search_unspec) {
    throw Error(ErrorCode::kInvalidArgument, "feature selection is empty");
  }
  return s;
}

std::string FeatureSelection::to_string() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(traffic, "traffic");
  add(time, "time");
  add(search, "search");
  add(search_unspec, "search_unspec");
  return out;
}

std::vector<GroupName> FeatureSelection::groups() const {
  std::vector<GroupName> out;
  if (traffic) out.push_back(GroupName::kTraffic);
  if (search) out.push_back(GroupName::kSearchSpec);
  if (search_unspec) out.push_back(GroupName::kSearchUnspec);
  if (time) out.push_back(GroupName::kCalendar);
  out.push_back(GroupName::kStatic);
  return out;
}

WindowSet build_windows(const Dataset& dataset, const WindowSpec& spec,
                        const FeatureSelection& selection) {
  spec.validate();
  const EpochMinutes span = static_cast<EpochMinutes>(spec.input_size) * dataset.input_step;
  const EpochMinutes out_span = static_cast<EpochMinutes>(spec.output_size) * dataset.output_step;
  const EpochMinutes end = dataset.start + static_cast<EpochMinutes>(dataset.n_days) * kMinutesPerDay;
  const auto names = selection.groups();

  std::vector<const FeatureGroup*> groups;
  for (const auto n : names) {
    const auto& g = dataset.group(n);
    if (!g.is_static() && span % g.step_minutes != 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  "input span of " + std::to_string(span) + " min is not a whole number of " +
                      std::string(to_string(n)) + " buckets");
    }
    groups.push_back(&g);
  }

  WindowSet out;
  const std::size_t K = dataset.segments();
  const auto& tg = dataset.target_grid;
  for (int d = 1; d <= dataset.n_days; ++d) {
    const EpochMinutes anchor = dataset.start + static_cast<EpochMinutes>(d) * kMinutesPerDay;
    const EpochMinutes in_start = anchor - span;
    const EpochMinutes target_start =
        anchor + static_cast<EpochMinutes>(spec.n_day_interval) * kMinutesPerDay;
    if (in_start < dataset.start) continue;
    if (target_start + out_span > end) break;
    ++out.anchors;

    Sample s;
    s.anchor = anchor;
    s.input_start = in_start;
    s.target_start = target_start;
    s.target_day = static_cast<int>((target_start - dataset.start) / kMinutesPerDay);
    s.group_names = names;
    bool missing = false;
    for (const auto* g : groups) {
      if (g->is_static()) {
        s.inputs.push_back(g->data);
        continue;
      }
      const std::size_t len = static_cast<std::size_t>(span / g->step_minutes);
      const std::size_t first = static_cast<std::size_t>((in_start - g->start) / g->step_minutes);
      Tensor3 x(K, len, g->data.features);
      for (std::size_t k = 0; k < K && !missing; ++k) {
        for (std::size_t t = 0; t < len; ++t) {
          for (std::size_t f = 0; f < g->data.features; ++f) {
            const double v = g->data.at(k, first + t, f);
            if (std::isnan(v)) missing = true;
            x.at(k, t, f) = v;
          }
        }
      }
      s.inputs.push_back(std::move(x));
    }
    if (missing) {
      ++out.dropped_missing_input;
      continue;
    }
    const std::size_t b0 = static_cast<std::size_t>((target_start - tg.start) / tg.step_minutes);
    const std::size_t out_size = static_cast<std::size_t>(spec.output_size);
    s.target.resize(K * out_size);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < out_size; ++j) {
        const double y = dataset.target_at(k, b0 + j);
        if (std::isnan(y)) missing = true;
        s.target[k * out_size + j] = y;
      }
    }
    if (missing) {
      ++out.dropped_missing_target;
      continue;
    }
    out.samples.push_back(std::move(s));
  }
  if (out.anchors == 0) {
    throw Error(ErrorCode::kSpanTooShort,
                "dataset of " + std::to_string(dataset.n_days) +
                    " days is too short for the requested window");
  }
  return out;
}

// ---------------------------------------------------------------- persistence

namespace {

nlohmann::ordered_json normalizer_json(const NormalizerState& state) {
  nlohmann::ordered_json j;
  j["fit_start"] = format_timestamp(state.fit_start);
  j["fit_end"] = format_timestamp(state.fit_end);
  j["target_min"] = state.target_min;
  j["target_max"] = state.target_max;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& [name, channels] : state.inputs) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : channels) arr.push_back({{"mean", c.mean}, {"stddev", c.stddev}});
    inputs[std::string(to_string(name))] = arr;
  }
  j["inputs"] = inputs;
  return j;
}

NormalizerState normalizer_from(const nlohmann::json& j) {
  NormalizerState s;
  const auto fs = parse_timestamp(j.at("fit_start").get<std::string>());
  const auto fe = parse_timestamp(j.at("fit_end").get<std::string>());
  if (!fs || !fe) throw Error(ErrorCode::kParse, "normalizer: bad fit span");
  s.fit_start = *fs;
  s.fit_end = *fe;
  s.target_min = j.at("target_min").get<double>();
  s.target_max = j.at("target_max").get<double>();
  for (const auto& [key, arr] : j.at("inputs").items()) {
    const auto name = group_from_string(key);
    if (!name) throw Error(ErrorCode::kParse, "normalizer: unknown group " + key);
    auto& channels = s.inputs[*name];
    for (const auto& c : arr) {
      channels.push_back({c.at("mean").get<double>(), c.at("stddev").get<double>()});
    }
  }
  return s;
}

std::string value_text(double v) { return csv::format_double(v); }

double parse_value(const std::string& text, const std::string& where) {
  if (text == "NA") return kNaN;
  const auto v = csv::parse_double(text);
  if (!v) throw Error(ErrorCode::kParse, where + ": bad number '" + text + "'");
  return *v;
}

}  // namespace

std::string normalizer_to_json(const NormalizerState& state) {
  return normalizer_json(state).dump(2);
}

NormalizerState normalizer_from_json(const std::string& text) {
  try {
    return normalizer_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("normalizer: ") + e.what());
  }
}

void write_dataset(const Dataset& dataset, const std::string& dir,
                   const NormalizerState* normalizer) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "routefed-dataset/1";
  manifest["start"] = format_timestamp(dataset.start);
  manifest["n_days"] = dataset.n_days;
  manifest["input_step"] = dataset.input_step;
  manifest["output_step"] = dataset.output_step;
  manifest["segment_ids"] = dataset.segment_ids;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : dataset.groups) {
    const std::string file = std::string(to_string(g.name)) + ".csv";
    std::ofstream out(fs::path(dir) / file);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + file);
    out << "segment_id,bucket";
    for (const auto& f : g.feature_names) out << ',' << f;
    out << '\n';
    for (std::size_t k = 0; k < g.data.segments; ++k) {
      for (std::size_t t = 0; t < g.data.time; ++t) {
        out << csv::escape(dataset.segment_ids[k]) << ',' << t;
        for (std::size_t f = 0; f < g.data.features; ++f) out << ',' << value_text(g.data.at(k, t, f));
        out << '\n';
      }
    }
    nlohmann::ordered_json gj;
    gj["name"] = to_string(g.name);
    gj["file"] = file;
    gj["step_minutes"] = g.step_minutes;
    gj["start"] = format_timestamp(g.start);
    gj["shape"] = {g.data.segments, g.data.time, g.data.features};
    gj["features"] = g.feature_names;
    groups.push_back(gj);
  }
  manifest["groups"] = groups;

  {
    std::ofstream out(fs::path(dir) / "targets.csv");
    if (!out) throw Error(ErrorCode::kIo, "cannot write targets.csv");
    out << "segment_id,bucket,speed\n";
    for (std::size_t k = 0; k < dataset.segments(); ++k) {
      for (std::size_t b = 0; b < dataset.target_grid.len; ++b) {
        out << csv::escape(dataset.segment_ids[k]) << ',' << b << ','
            << value_text(dataset.target_at(k, b)) << '\n';
      }
    }
  }
  manifest["targets"] = {{"file", "targets.csv"},
                         {"start", format_timestamp(dataset.target_grid.start)},
                         {"step_minutes", dataset.target_grid.step_minutes},
                         {"len", dataset.target_grid.len}};
  if (normalizer) manifest["normalizer"] = normalizer_json(*normalizer);

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw Error(ErrorCode::kIo, "cannot write manifest.json");
  out << manifest.dump(2) << '\n';
}

namespace {

// Reads a long-format `segment_id,bucket,v0,...` file into a tensor.
Tensor3 read_long_csv(const std::filesystem::path& path, std::size_t K, std::size_t T,
                      std::size_t F) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  Tensor3 out(K, T, F, kNaN);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto text = csv::chomp(line);
    if (text.empty()) continue;
    const auto f = csv::split_line(text);
    if (f.size() != F + 2) {
      throw Error(ErrorCode::kParse, path.string() + ": wrong field count");
    }
    const std::size_t k = rows / T;
    const std::size_t t = rows % T;
    if (k >= K) throw Error(ErrorCode::kParse, path.string() + ": too many rows");
    for (std::size_t j = 0; j < F; ++j) out.at(k, t, j) = parse_value(f[j + 2], path.string());
    ++rows;
  }
  if (rows != K * T) throw Error(ErrorCode::kParse, path.string() + ": row count mismatch");
  return out;
}

}  // namespace

Dataset read_dataset(const std::string& dir, std::optional<NormalizerState>* normalizer) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + dir + "/manifest.json");
  Dataset ds;
  try {
    const auto m = nlohmann::json::parse(in);
    const auto start = parse_timestamp(m.at("start").get<std::string>());
    if (!start) throw Error(ErrorCode::kParse, "manifest: bad start");
    ds.start = *start;
    ds.n_days = m.at("n_days").get<int>();
    ds.input_step = m.at("input_step").get<int>();
    ds.output_step = m.at("output_step").get<int>();
    ds.segment_ids = m.at("segment_ids").get<std::vector<std::string>>();
    for (const auto& gj : m.at("groups")) {
      FeatureGroup g;
      const auto name = group_from_string(gj.at("name").get<std::string>());
      if (!name) throw Error(ErrorCode::kParse, "manifest: unknown group");
      g.name = *name;
      g.step_minutes = gj.at("step_minutes").get<int>();
      g.start = *parse_timestamp(gj.at("start").get<std::string>());
      g.feature_names = gj.at("features").get<std::vector<std::string>>();
      const auto shape = gj.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 3 || shape[0] != ds.segment_ids.size()) {
        throw Error(ErrorCode::kParse, "manifest: bad group shape");
      }
      g.data = read_long_csv(fs::path(dir) / gj.at("file").get<std::string>(), shape[0],
                             shape[1], shape[2]);
      ds.groups.push_back(std::move(g));
    }
    const auto& tj = m.at("targets");
    ds.target_grid = {*parse_timestamp(tj.at("start").get<std::string>()),
                      tj.at("step_minutes").get<int>(), tj.at("len").get<std::size_t>()};
    const Tensor3 t = read_long_csv(fs::path(dir) / tj.at("file").get<std::string>(),
                                    ds.segment_ids.size(), ds.target_grid.len, 1);
    ds.target = t.data;
    if (normalizer) {
      if (m.contains("normalizer")) {
        *normalizer = normalizer_from(m.at("normalizer"));
      } else {
        normalizer->reset();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("manifest: ") + e.what());
  }
  return ds;
}

}  // namespace routefed
