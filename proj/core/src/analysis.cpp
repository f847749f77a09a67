#include "routefed/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"

namespace routefed {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2 || constant(x) || constant(y)) return kNaN;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double CorrelationMatrix::at(const std::string& a, const std::string& b) const {
  const auto ia = std::find(names.begin(), names.end(), a);
  const auto ib = std::find(names.begin(), names.end(), b);
  if (ia == names.end() || ib == names.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no column " + (ia == names.end() ? a : b));
  }
  return at(static_cast<std::size_t>(ia - names.begin()), static_cast<std::size_t>(ib - names.begin()));
}

CorrelationMatrix correlation_matrix(const std::vector<std::string>& names,
                                     const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) {
    throw Error(ErrorCode::kShapeMismatch, "names and columns differ in length");
  }
  for (const auto& c : columns) {
    if (c.size() != columns.front().size()) {
      throw Error(ErrorCode::kShapeMismatch, "columns differ in length");
    }
  }
  const std::size_t n = names.size();
  CorrelationMatrix m;
  m.names = names;
  m.values.assign(n * n, kNaN);
  std::vector<bool> degenerate(n);
  for (std::size_t i = 0; i < n; ++i) {
    degenerate[i] = columns[i].size() < 2 || constant(columns[i]);
    if (degenerate[i]) m.degenerate.push_back(names[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (degenerate[i]) continue;
    m.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (degenerate[j]) continue;
      const double r = pearson(columns[i], columns[j]);
      m.values[i * n + j] = r;
      m.values[j * n + i] = r;
    }
  }
  return m;
}

const std::vector<double>& AnalysisTable::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorCode::kInvalidArgument, "no column " + name);
  return columns[static_cast<std::size_t>(it - names.begin())];
}

AnalysisTable analysis_table(const Dataset& ds) {
  const auto& traffic = ds.group(GroupName::kTraffic);
  const auto& spec = ds.group(GroupName::kSearchSpec);
  const auto& unspec = ds.group(GroupName::kSearchUnspec);
  const auto& cal = ds.group(GroupName::kCalendar);
  const auto& stat = ds.group(GroupName::kStatic);
  if (60 % ds.input_step != 0 || spec.step_minutes != ds.input_step ||
      traffic.step_minutes != ds.input_step) {
    throw Error(ErrorCode::kInvalidArgument, "analysis needs an input step dividing 60");
  }
  AnalysisTable t;
  t.names = {"dayofweek", "is_holiday", "hour", "degree_sum", "KP", "OCC", "allCars", "speed",
             "search_5min", "search_1h"};
  for (const auto& f : unspec.feature_names) t.names.push_back(f);
  t.columns.resize(t.names.size());

  const std::size_t per_hour = static_cast<std::size_t>(60 / ds.input_step);
  const std::size_t T = traffic.data.time;
  for (std::size_t k = 0; k < ds.segments(); ++k) {
    for (std::size_t b = 0; b < T; ++b) {
      const double cars = traffic.data.at(k, b, 0);
      const double speed = traffic.data.at(k, b, 1);
      const double occ = traffic.data.at(k, b, 2);
      if (std::isnan(cars) || std::isnan(speed) || std::isnan(occ)) continue;
      const EpochMinutes time = traffic.start + static_cast<EpochMinutes>(b) * ds.input_step;
      const auto cb = static_cast<std::size_t>((time - cal.start) / cal.step_minutes);
      const auto ub = static_cast<std::size_t>((time - unspec.start) / unspec.step_minutes);
      const std::size_t hour_first = (b / per_hour) * per_hour;
      double hour_sum = 0.0;
      for (std::size_t j = hour_first; j < std::min(T, hour_first + per_hour); ++j) {
        hour_sum += spec.data.at(k, j, 0);
      }
      std::size_t c = 0;
      t.columns[c++].push_back(cal.data.at(k, cb, 0));
      t.columns[c++].push_back(cal.data.at(k, cb, 1));
      t.columns[c++].push_back(cal.data.at(k, cb, 2));
      t.columns[c++].push_back(stat.data.at(k, 0, 1));
      t.columns[c++].push_back(stat.data.at(k, 0, 0));
      t.columns[c++].push_back(occ);
      t.columns[c++].push_back(cars);
      t.columns[c++].push_back(speed);
      t.columns[c++].push_back(spec.data.at(k, b, 0));
      t.columns[c++].push_back(hour_sum);
      for (std::size_t f = 0; f < unspec.data.features; ++f) {
        t.columns[c++].push_back(unspec.data.at(k, ub, f));
      }
    }
  }
  return t;
}

double search_residual_correlation(const Dataset& ds) {
  const auto& traffic = ds.group(GroupName::kTraffic);
  const auto& spec = ds.group(GroupName::kSearchSpec);
  const auto& cal = ds.group(GroupName::kCalendar);
  if (spec.step_minutes != traffic.step_minutes) {
    throw Error(ErrorCode::kInvalidArgument, "search and traffic steps differ");
  }
  const std::size_t per_day = static_cast<std::size_t>(kMinutesPerDay / traffic.step_minutes);
  const std::size_t T = traffic.data.time;
  auto profile_key = [&](std::size_t k, std::size_t b) {
    const EpochMinutes time = traffic.start + static_cast<EpochMinutes>(b) * traffic.step_minutes;
    const auto cb = static_cast<std::size_t>((time - cal.start) / cal.step_minutes);
    const bool off = cal.data.at(k, cb, 1) > 0.0 || cal.data.at(k, cb, 0) >= 5.0;
    return (k * 2 + (off ? 1 : 0)) * per_day + b % per_day;
  };
  std::vector<double> sum(ds.segments() * 2 * per_day, 0.0);
  std::vector<double> n(sum.size(), 0.0);
  for (std::size_t k = 0; k < ds.segments(); ++k) {
    for (std::size_t b = 0; b < T; ++b) {
      const double v = traffic.data.at(k, b, 1);
      if (std::isnan(v)) continue;
      const auto key = profile_key(k, b);
      sum[key] += v;
      n[key] += 1.0;
    }
  }
  std::vector<double> residual, searches;
  for (std::size_t k = 0; k < ds.segments(); ++k) {
    for (std::size_t b = 0; b < T; ++b) {
      const double v = traffic.data.at(k, b, 1);
      if (std::isnan(v)) continue;
      const auto key = profile_key(k, b);
      residual.push_back(v - sum[key] / n[key]);
      searches.push_back(spec.data.at(k, b, 0));
    }
  }
  return pearson(searches, residual);
}

std::string_view to_string(DayType type) {
  switch (type) {
    case DayType::kWeekday: return "weekday";
    case DayType::kWeekend: return "weekend";
    case DayType::kHoliday: return "holiday";
  }
  return "weekday";
}

DayType day_type(EpochMinutes t, const HolidayCalendar& calendar) {
  if (calendar.is_holiday(t)) return DayType::kHoliday;
  return day_of_week(t) >= 5 ? DayType::kWeekend : DayType::kWeekday;
}

std::vector<DayTypeStats> day_type_distribution(const std::vector<SearchRecord>& records,
                                                const HolidayCalendar& calendar,
                                                EpochMinutes start, int n_days) {
  if (n_days <= 0) throw Error(ErrorCode::kInvalidArgument, "n_days must be > 0");
  const std::int64_t first = day_index(start);
  std::vector<double> spec(static_cast<std::size_t>(n_days), 0.0);
  std::vector<double> unspec(spec.size(), 0.0);
  for (const auto& r : records) {
    const std::int64_t d = day_index(r.search_time) - first;
    if (d < 0 || d >= n_days) continue;
    (classify(r) == SearchClass::kTimeSpecified ? spec : unspec)[static_cast<std::size_t>(d)] += 1.0;
  }
  std::vector<DayTypeStats> out;
  for (const auto cls : {SearchClass::kTimeSpecified, SearchClass::kNonTimeSpecified}) {
    const auto& counts = cls == SearchClass::kTimeSpecified ? spec : unspec;
    for (const auto type : {DayType::kWeekday, DayType::kWeekend, DayType::kHoliday}) {
      std::vector<double> v;
      for (int d = 0; d < n_days; ++d) {
        const EpochMinutes t = (first + d) * kMinutesPerDay;
        if (day_type(t, calendar) == type) v.push_back(counts[static_cast<std::size_t>(d)]);
      }
      DayTypeStats s;
      s.type = type;
      s.search_class = cls;
      s.days = v.size();
      if (v.empty()) {
        s.mean = s.stddev = s.min = s.median = s.max = kNaN;
      } else {
        std::sort(v.begin(), v.end());
        s.mean = mean_of(v);
        double ss = 0.0;
        for (const double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
        s.min = v.front();
        s.max = v.back();
        const std::size_t h = v.size() / 2;
        s.median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
      }
      out.push_back(s);
    }
  }
  return out;
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "variable";
  for (const auto& n : m.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.names[i];
    for (std::size_t j = 0; j < m.size(); ++j) out << ',' << csv::format_double(m.at(i, j));
    out << '\n';
  }
}

void write_day_type_csv(std::ostream& out, const std::vector<DayTypeStats>& stats) {
  out << "search_class,day_type,days,mean,std,min,median,max\n";
  for (const auto& s : stats) {
    out << (s.search_class == SearchClass::kTimeSpecified ? "time_specified" : "non_time_specified")
        << ',' << to_string(s.type) << ',' << s.days << ',' << csv::format_double(s.mean) << ','
        << csv::format_double(s.stddev) << ',' << csv::format_double(s.min) << ','
        << csv::format_double(s.median) << ',' << csv::format_double(s.max) << '\n';
  }
}

}  // namespace routefed
