#include "routefed/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "routefed/error.hpp"
#include "routefed/rng.hpp"

namespace routefed::synth {
namespace {

enum class DayType { kWeekday, kWeekend, kHoliday };

DayType day_type(EpochMinutes t, const HolidayCalendar& holidays) {
  if (holidays.is_holiday(t)) return DayType::kHoliday;
  return day_of_week(t) >= 5 ? DayType::kWeekend : DayType::kWeekday;
}

double bump(double h, double mu, double sigma) {
  const double z = (h - mu) / sigma;
  return std::exp(-0.5 * z * z);
}

// Congestion depth (km/h before the segment scale) at hour-of-day h.
double profile_drop(const Scenario& sc, DayType type, double h) {
  switch (type) {
    case DayType::kWeekday:
      return sc.weekday_peak_drop * (bump(h, 8.0, 1.2) + bump(h, 18.0, 1.5));
    case DayType::kWeekend:
      return sc.weekend_peak_drop * bump(h, 14.0, 2.5);
    case DayType::kHoliday:
      return sc.holiday_factor * sc.weekend_peak_drop * bump(h, 14.0, 2.5);
  }
  return 0.0;
}

double quantize(double v, double unit) { return std::round(v / unit) * unit; }

double finish_speed(const Scenario& sc, double raw) {
  return quantize(std::clamp(raw, 5.0, sc.free_speed_kmh + 15.0), 0.01);
}

// Segments nearer the start of the corridor (city side) congest more.
double segment_scale(const RoadGraph& graph, std::size_t k) {
  const auto& seg = graph.segments()[k];
  const double total = graph.nodes().back().kp;
  const double mid = 0.5 * (graph.node(seg.from_ic).kp + graph.node(seg.to_ic).kp);
  return 1.3 - 0.8 * (total > 0.0 ? mid / total : 0.0);
}

double hour_of(EpochMinutes t) {
  return static_cast<double>(t - day_index(t) * kMinutesPerDay) / 60.0;
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", i);
  return buf;
}

std::string ic_id(int i) { return "IC" + two_digits(i); }

struct Trip {
  int origin = 0;
  int destination = 0;
  double departure = 0.0;  // epoch minutes
};

// Corridor distance between two IC positions.
double corridor_km(const RoadGraph& graph, int a, int b) {
  return std::abs(graph.nodes()[static_cast<std::size_t>(b)].kp -
                  graph.nodes()[static_cast<std::size_t>(a)].kp);
}

SearchRecord search_for(const Scenario& sc, const RoadGraph& graph, const Trip& trip,
                        bool time_specified, Rng& rng) {
  SearchRecord r;
  r.departure_ic = ic_id(trip.origin);
  r.arrival_ic = ic_id(trip.destination);
  const double lead = rng.uniform(sc.lead_min_hours, sc.lead_max_hours) * 60.0;
  r.search_time = static_cast<EpochMinutes>(std::floor(trip.departure - lead));
  if (time_specified) {
    if (rng.bernoulli(sc.arrival_anchor_share)) {
      const double travel = corridor_km(graph, trip.origin, trip.destination) / kDefaultSpeedKmh * 60.0;
      r.arrival_time = static_cast<EpochMinutes>(std::llround(trip.departure + travel));
    } else {
      r.departure_time = static_cast<EpochMinutes>(std::llround(trip.departure));
    }
  }
  return r;
}

Trip random_trip(int n_ics, Rng& rng) {
  int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ics)));
  int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ics - 1)));
  if (b >= a) ++b;
  return {a, b, 0.0};
}

HolidayCalendar scenario_holidays(const Scenario& sc) {
  HolidayCalendar cal;
  const EpochMinutes start = sc.start_time();
  const EpochMinutes end = start + static_cast<EpochMinutes>(sc.n_days) * kMinutesPerDay;
  if (!sc.holidays.empty()) {
    for (const auto& d : sc.holidays) {
      const auto t = parse_date(d);
      if (!t) throw Error(ErrorCode::kInvalidScenario, "bad holiday date " + d);
      cal.add(*t, "holiday");
    }
    return cal;
  }
  for (const auto& [date, name] : japanese_holidays()) {
    const auto t = *parse_date(date);
    if (t >= start && t < end) cal.add(t, name);
  }
  return cal;
}

}  // namespace

void Scenario::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidScenario, why); };
  if (n_ics < 2) fail("n_ics must be >= 2");
  if (n_days < 1) fail("n_days must be >= 1");
  if (start % kMinutesPerDay != 0) fail("start must be a local midnight");
  if (!(free_speed_kmh > 0.0)) fail("free_speed_kmh must be > 0");
  if (speed_noise < 0.0 || volume_noise < 0.0 || day_offset_sd < 0.0) fail("noise must be >= 0");
  if (std::abs(day_offset_coef) >= 1.0) fail("day_offset_coef must be in (-1, 1)");
  if (missing_rate < 0.0 || missing_rate >= 1.0) fail("missing_rate must be in [0, 1)");
  if (spec_searches_per_day < 0.0 || unspec_searches_per_day < 0.0) fail("search rates must be >= 0");
  if (weekend_amplification < 0.0 || holiday_amplification < 0.0) fail("amplification must be >= 0");
  if (coupling < 0.0 || unspec_coupling < 0.0 || coupling + unspec_coupling > 1.0) {
    fail("coupling shares must be >= 0 and sum to at most 1");
  }
  if (lead_min_hours < 0.0 || lead_max_hours < lead_min_hours) fail("bad lead time range");
  if (arrival_anchor_share < 0.0 || arrival_anchor_share > 1.0) fail("bad arrival_anchor_share");
  if (n_events < 0) fail("n_events must be >= 0");
  const std::size_t n_segments = 2 * static_cast<std::size_t>(n_ics - 1);
  for (const auto& e : events) {
    if (e.day < 0 || e.day >= n_days || e.segment >= n_segments || e.duration_minutes <= 0 ||
        e.start_minute < 0 || e.start_minute >= static_cast<int>(kMinutesPerDay) ||
        e.severity < 0.0) {
      fail("event out of range");
    }
  }
  if (corrupt_search_lines < 0 || corrupt_traffic_lines < 0 || duplicate_traffic_lines < 0) {
    fail("defect counts must be >= 0");
  }
}

EpochMinutes Scenario::start_time() const {
  return start != 0 ? start : *parse_date("2022-04-01");
}

RoadGraph corridor_graph(const Scenario& sc) {
  Rng rng(sc.seed ^ 0xC0FFEE1234567ULL);
  RoadGraph g;
  double kp = 0.0;
  std::vector<double> lengths;
  for (int i = 0; i < sc.n_ics; ++i) {
    g.add_node({ic_id(i), "Interchange " + two_digits(i), quantize(kp, 0.1)});
    if (i + 1 < sc.n_ics) {
      const double len = quantize(rng.uniform(2.5, 4.5), 0.1);
      lengths.push_back(len);
      kp += len;
    }
  }
  auto add = [&](int i, bool forward) {
    const int from = forward ? i : i + 1;
    const int to = forward ? i + 1 : i;
    const double len = quantize(g.nodes()[static_cast<std::size_t>(i + 1)].kp -
                                    g.nodes()[static_cast<std::size_t>(i)].kp,
                                0.1);
    const int kp_index = static_cast<int>(g.nodes()[static_cast<std::size_t>(i)].kp / 2.0);
    g.add_segment({sc.road_code + (forward ? "-F-" : "-B-") + two_digits(i), ic_id(from),
                   ic_id(to), len, sc.road_code, kp_index});
  };
  for (int i = 0; i + 1 < sc.n_ics; ++i) add(i, true);
  for (int i = 0; i + 1 < sc.n_ics; ++i) add(i, false);
  return g;
}

double profile_speed(const Scenario& sc, const RoadGraph& graph, const HolidayCalendar& holidays,
                     std::size_t k, EpochMinutes t) {
  const double drop = profile_drop(sc, day_type(t, holidays), hour_of(t));
  return finish_speed(sc, sc.free_speed_kmh - segment_scale(graph, k) * drop);
}

SyntheticData generate(const Scenario& sc) {
  sc.validate();
  SyntheticData out;
  out.graph = corridor_graph(sc);
  out.holidays = scenario_holidays(sc);
  const auto& graph = out.graph;
  const std::size_t K = graph.segment_count();
  const EpochMinutes start = sc.start_time();
  const std::size_t buckets_per_day = static_cast<std::size_t>(kMinutesPerDay / kTrafficStepMinutes);
  Manifest& man = out.manifest;
  man.seed = sc.seed;
  man.segments = K;
  for (const auto& [day, name] : out.holidays.entries()) {
    man.holidays.push_back(format_date(day * kMinutesPerDay));
  }

  Rng rng(sc.seed);

  // Events.
  man.events = sc.events;
  if (man.events.empty()) {
    for (int i = 0; i < sc.n_events; ++i) {
      CongestionEvent e;
      e.day = static_cast<int>(rng.below(static_cast<std::uint64_t>(sc.n_days)));
      e.segment = static_cast<std::size_t>(rng.below(K));
      e.start_minute = 60 * (7 + static_cast<int>(rng.below(11)));
      e.duration_minutes = 60 * (1 + static_cast<int>(rng.below(4)));
      e.severity = quantize(rng.uniform(15.0, 35.0), 0.1);
      man.events.push_back(e);
    }
  }

  // Day-level persistent offsets: a shared AR(1) plus a per-segment AR(1).
  const double rho = sc.day_offset_coef;
  const double stationary = 1.0 / std::sqrt(1.0 - rho * rho);
  std::vector<double> offset(static_cast<std::size_t>(sc.n_days) * K, 0.0);
  {
    double shared = rng.normal() * sc.day_offset_sd * stationary;
    std::vector<double> own(K);
    for (auto& o : own) o = rng.normal() * 0.5 * sc.day_offset_sd * stationary;
    for (int d = 0; d < sc.n_days; ++d) {
      if (d > 0) {
        shared = rho * shared + rng.normal() * sc.day_offset_sd;
        for (auto& o : own) o = rho * o + rng.normal() * 0.5 * sc.day_offset_sd;
      }
      for (std::size_t k = 0; k < K; ++k) offset[static_cast<std::size_t>(d) * K + k] = shared + own[k];
    }
  }

  // Traffic.
  std::vector<double> scale(K);
  for (std::size_t k = 0; k < K; ++k) scale[k] = segment_scale(graph, k);
  std::vector<std::vector<bool>> withheld(K);
  if (sc.missing_rate > 0.0) {
    const std::size_t n = buckets_per_day * static_cast<std::size_t>(sc.n_days);
    for (std::size_t k = 0; k < K; ++k) {
      withheld[k].assign(n, false);
      for (std::size_t b = 0; b < n; ++b) {
        if (!rng.bernoulli(sc.missing_rate / 3.5)) continue;
        const std::size_t run = 1 + static_cast<std::size_t>(rng.below(6));
        for (std::size_t j = b; j < std::min(n, b + run); ++j) withheld[k][j] = true;
      }
    }
  }
  out.traffic.reserve(K * buckets_per_day * static_cast<std::size_t>(sc.n_days));
  for (int d = 0; d < sc.n_days; ++d) {
    const EpochMinutes day_start = start + static_cast<EpochMinutes>(d) * kMinutesPerDay;
    const DayType type = day_type(day_start, out.holidays);
    for (std::size_t b = 0; b < buckets_per_day; ++b) {
      const EpochMinutes t = day_start + static_cast<EpochMinutes>(b) * kTrafficStepMinutes;
      const int minute = static_cast<int>(b) * kTrafficStepMinutes;
      const double drop = profile_drop(sc, type, hour_of(t));
      for (std::size_t k = 0; k < K; ++k) {
        double event_drop = 0.0;
        for (const auto& e : man.events) {
          if (e.day == d && e.segment == k && minute >= e.start_minute &&
              minute < e.start_minute + e.duration_minutes) {
            event_drop += e.severity;
          }
        }
        const double speed_noise = sc.speed_noise > 0.0 ? rng.normal() * sc.speed_noise : 0.0;
        const double vol_noise = sc.volume_noise > 0.0 ? rng.normal() * sc.volume_noise : 0.0;
        const double speed = finish_speed(
            sc, sc.free_speed_kmh - scale[k] * drop + offset[static_cast<std::size_t>(d) * K + k] -
                    event_drop + speed_noise);
        const double activity = 0.25 + drop / 10.0;
        const double volume = sc.base_volume * scale[k] * activity * (1.0 + vol_noise) *
                              (event_drop > 0.0 ? 1.3 : 1.0);
        const double occ = quantize(
            std::clamp(0.02 + 0.6 * std::max(0.0, sc.free_speed_kmh - speed) / sc.free_speed_kmh +
                           0.002 * volume,
                       0.0, 1.0),
            0.0001);
        const std::size_t idx = static_cast<std::size_t>(d) * buckets_per_day + b;
        if (!withheld[k].empty() && withheld[k][idx]) {
          ++man.traffic_withheld;
          continue;
        }
        out.traffic.push_back({graph.segments()[k].id, t,
                               static_cast<std::int64_t>(std::llround(std::max(0.0, volume))),
                               speed, occ});
      }
    }
  }
  man.traffic_records = out.traffic.size();

  // Searches: baseline time-specified trips following the activity profile.
  const int n_ics = sc.n_ics;
  for (int d = 0; d < sc.n_days; ++d) {
    const EpochMinutes day_start = start + static_cast<EpochMinutes>(d) * kMinutesPerDay;
    const DayType type = day_type(day_start, out.holidays);
    const double factor = type == DayType::kWeekday ? 1.0 : (type == DayType::kWeekend ? 1.2 : 1.4);
    const std::uint64_t n = rng.poisson(sc.spec_searches_per_day * factor);
    double max_drop = 0.0;
    for (int m = 0; m < 1440; m += 10) max_drop = std::max(max_drop, profile_drop(sc, type, m / 60.0));
    for (std::uint64_t i = 0; i < n; ++i) {
      double minute;
      do {
        minute = rng.uniform(0.0, 1440.0);
      } while (rng.uniform() * (2.0 + max_drop) > 2.0 + profile_drop(sc, type, minute / 60.0));
      Trip trip = random_trip(n_ics, rng);
      trip.departure = static_cast<double>(day_start) + minute;
      out.searches.push_back(search_for(sc, graph, trip, true, rng));
      ++man.baseline_searches;
    }
  }

  // Leisure searches without a time, amplified on weekends and holidays.
  for (int d = 0; d < sc.n_days; ++d) {
    const EpochMinutes day_start = start + static_cast<EpochMinutes>(d) * kMinutesPerDay;
    const DayType type = day_type(day_start, out.holidays);
    const double amp = type == DayType::kWeekday
                           ? 1.0
                           : (type == DayType::kWeekend ? sc.weekend_amplification
                                                        : sc.holiday_amplification);
    const std::uint64_t n = rng.poisson(sc.unspec_searches_per_day * amp);
    for (std::uint64_t i = 0; i < n; ++i) {
      Trip trip = random_trip(n_ics, rng);
      SearchRecord r;
      r.departure_ic = ic_id(trip.origin);
      r.arrival_ic = ic_id(trip.destination);
      r.search_time = day_start + static_cast<EpochMinutes>(rng.uniform(360.0, 1440.0));
      out.searches.push_back(std::move(r));
      ++man.leisure_searches;
    }
  }

  // Trips that cause the planted congestion, searched ahead of time.
  for (const auto& e : man.events) {
    const auto& seg = graph.segments()[e.segment];
    const int from = *graph.node_index(seg.from_ic);
    const int to = *graph.node_index(seg.to_ic);
    const bool forward = to > from;
    const std::uint64_t n = static_cast<std::uint64_t>(std::llround(e.severity * sc.event_trips_per_kmh));
    const EpochMinutes day_start = start + static_cast<EpochMinutes>(e.day) * kMinutesPerDay;
    for (std::uint64_t i = 0; i < n; ++i) {
      Trip trip;
      if (forward) {
        trip.origin = static_cast<int>(rng.below(static_cast<std::uint64_t>(from + 1)));
        trip.destination = to + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ics - to)));
      } else {
        trip.origin = from + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ics - from)));
        trip.destination = static_cast<int>(rng.below(static_cast<std::uint64_t>(to + 1)));
      }
      const double enter = static_cast<double>(day_start + e.start_minute) +
                           rng.uniform(0.0, static_cast<double>(e.duration_minutes));
      trip.departure = enter - corridor_km(graph, trip.origin, from) / kDefaultSpeedKmh * 60.0;
      const double u = rng.uniform();
      if (u < sc.coupling) {
        out.searches.push_back(search_for(sc, graph, trip, true, rng));
      } else if (u < sc.coupling + sc.unspec_coupling) {
        out.searches.push_back(search_for(sc, graph, trip, false, rng));
      } else {
        continue;
      }
      ++man.event_searches;
    }
  }

  std::stable_sort(out.searches.begin(), out.searches.end(),
                   [](const SearchRecord& a, const SearchRecord& b) {
                     return a.search_time < b.search_time;
                   });
  man.search_records = out.searches.size();
  for (const auto& r : out.searches) {
    if (r.departure_time || r.arrival_time) {
      ++man.time_specified;
    } else {
      ++man.non_time_specified;
    }
  }

  // Serialize, then plant defects as extra lines.
  auto to_lines = [](const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
  };
  auto join = [](const std::vector<std::string>& lines) {
    std::string s;
    for (const auto& l : lines) {
      s += l;
      s += '\n';
    }
    return s;
  };

  std::ostringstream traffic_text;
  write_traffic_log(traffic_text, out.traffic);
  std::vector<std::string> tlines = to_lines(traffic_text.str());
  if (sc.duplicate_traffic_lines > 0 && tlines.size() > 1) {
    // Pick distinct clean lines (by position in the clean list), copy each
    // right after itself; the first occurrence is the one kept.
    std::vector<std::size_t> picks;
    const std::size_t n_clean = tlines.size() - 1;
    while (picks.size() < std::min<std::size_t>(static_cast<std::size_t>(sc.duplicate_traffic_lines), n_clean)) {
      const std::size_t p = 1 + static_cast<std::size_t>(rng.below(n_clean));
      if (std::find(picks.begin(), picks.end(), p) == picks.end()) picks.push_back(p);
    }
    std::sort(picks.begin(), picks.end(), std::greater<>());
    for (const std::size_t p : picks) {
      tlines.insert(tlines.begin() + static_cast<std::ptrdiff_t>(p) + 1, tlines[p]);
    }
    man.duplicate_traffic_lines = picks.size();
  }
  for (int i = 0; i < sc.corrupt_traffic_lines; ++i) {
    static const char* kBad[] = {
        "E14-F-00,2022-04-01 00:00,10,80,1.7",
        "E14-F-00,not-a-time,10,80,0.1",
        "E14-F-00,2022-04-01 00:03,10,80,0.1",
        "E14-F-00,2022-04-01 00:00,-4,80,0.1",
        "E14-F-00,2022-04-01 00:00,10",
    };
    const std::size_t pos = 1 + static_cast<std::size_t>(rng.below(tlines.size()));
    tlines.insert(tlines.begin() + static_cast<std::ptrdiff_t>(pos), kBad[i % 5]);
    ++man.corrupt_traffic_lines;
  }
  out.traffic_csv = join(tlines);

  std::ostringstream search_text;
  write_search_log(search_text, out.searches);
  std::vector<std::string> slines = to_lines(search_text.str());
  for (int i = 0; i < sc.corrupt_search_lines; ++i) {
    static const char* kBad[] = {
        "2022-04-01 10:00,,IC03,,",
        "2022-13-45 99:99,IC01,IC02,,",
        "2022-04-01 10:00,IC01,IC02,2022-04-02 12:00,2022-04-02 11:00",
        "2022-04-01 10:00,IC01,IC02",
        "2022-04-01 10:00,IC01,IC02,tomorrow,",
    };
    const std::size_t pos = 1 + static_cast<std::size_t>(rng.below(slines.size()));
    slines.insert(slines.begin() + static_cast<std::ptrdiff_t>(pos), kBad[i % 5]);
    ++man.corrupt_search_lines;
  }
  out.search_csv = join(slines);
  return out;
}

const std::vector<std::pair<std::string, std::string>>& japanese_holidays() {
  static const std::vector<std::pair<std::string, std::string>> kDays = {
      {"2021-01-01", "New Year's Day"}, {"2021-01-11", "Coming of Age Day"},
      {"2021-02-11", "National Foundation Day"}, {"2021-02-23", "Emperor's Birthday"},
      {"2021-03-20", "Vernal Equinox Day"}, {"2021-04-29", "Showa Day"},
      {"2021-05-03", "Constitution Memorial Day"}, {"2021-05-04", "Greenery Day"},
      {"2021-05-05", "Children's Day"}, {"2021-07-22", "Marine Day"},
      {"2021-07-23", "Sports Day"}, {"2021-08-08", "Mountain Day"},
      {"2021-08-09", "Substitute Holiday"}, {"2021-09-20", "Respect for the Aged Day"},
      {"2021-09-23", "Autumnal Equinox Day"}, {"2021-11-03", "Culture Day"},
      {"2021-11-23", "Labor Thanksgiving Day"},
      {"2022-01-01", "New Year's Day"}, {"2022-01-10", "Coming of Age Day"},
      {"2022-02-11", "National Foundation Day"}, {"2022-02-23", "Emperor's Birthday"},
      {"2022-03-21", "Vernal Equinox Day"}, {"2022-04-29", "Showa Day"},
      {"2022-05-03", "Constitution Memorial Day"}, {"2022-05-04", "Greenery Day"},
      {"2022-05-05", "Children's Day"}, {"2022-07-18", "Marine Day"},
      {"2022-08-11", "Mountain Day"}, {"2022-09-19", "Respect for the Aged Day"},
      {"2022-09-23", "Autumnal Equinox Day"}, {"2022-10-10", "Sports Day"},
      {"2022-11-03", "Culture Day"}, {"2022-11-23", "Labor Thanksgiving Day"},
      {"2023-01-01", "New Year's Day"}, {"2023-01-02", "Substitute Holiday"},
      {"2023-01-09", "Coming of Age Day"}, {"2023-02-11", "National Foundation Day"},
      {"2023-02-23", "Emperor's Birthday"}, {"2023-03-21", "Vernal Equinox Day"},
      {"2023-04-29", "Showa Day"}, {"2023-05-03", "Constitution Memorial Day"},
      {"2023-05-04", "Greenery Day"}, {"2023-05-05", "Children's Day"},
      {"2023-07-17", "Marine Day"}, {"2023-08-11", "Mountain Day"},
      {"2023-09-18", "Respect for the Aged Day"}, {"2023-09-23", "Autumnal Equinox Day"},
      {"2023-10-09", "Sports Day"}, {"2023-11-03", "Culture Day"},
      {"2023-11-23", "Labor Thanksgiving Day"},
      {"2024-01-01", "New Year's Day"}, {"2024-01-08", "Coming of Age Day"},
      {"2024-02-11", "National Foundation Day"}, {"2024-02-12", "Substitute Holiday"},
      {"2024-02-23", "Emperor's Birthday"}, {"2024-03-20", "Vernal Equinox Day"},
      {"2024-04-29", "Showa Day"}, {"2024-05-03", "Constitution Memorial Day"},
      {"2024-05-04", "Greenery Day"}, {"2024-05-05", "Children's Day"},
      {"2024-05-06", "Substitute Holiday"}, {"2024-07-15", "Marine Day"},
      {"2024-08-11", "Mountain Day"}, {"2024-08-12", "Substitute Holiday"},
      {"2024-09-16", "Respect for the Aged Day"}, {"2024-09-22", "Autumnal Equinox Day"},
      {"2024-09-23", "Substitute Holiday"}, {"2024-10-14", "Sports Day"},
      {"2024-11-03", "Culture Day"}, {"2024-11-04", "Substitute Holiday"},
      {"2024-11-23", "Labor Thanksgiving Day"},
  };
  return kDays;
}

namespace {

nlohmann::ordered_json scenario_json(const Scenario& sc) {
  nlohmann::ordered_json j;
  j["seed"] = sc.seed;
  j["n_ics"] = sc.n_ics;
  j["n_days"] = sc.n_days;
  j["start"] = format_date(sc.start_time());
  j["road_code"] = sc.road_code;
  j["free_speed_kmh"] = sc.free_speed_kmh;
  j["weekday_peak_drop"] = sc.weekday_peak_drop;
  j["weekend_peak_drop"] = sc.weekend_peak_drop;
  j["holiday_factor"] = sc.holiday_factor;
  j["base_volume"] = sc.base_volume;
  j["speed_noise"] = sc.speed_noise;
  j["volume_noise"] = sc.volume_noise;
  j["day_offset_coef"] = sc.day_offset_coef;
  j["day_offset_sd"] = sc.day_offset_sd;
  j["missing_rate"] = sc.missing_rate;
  j["spec_searches_per_day"] = sc.spec_searches_per_day;
  j["unspec_searches_per_day"] = sc.unspec_searches_per_day;
  j["weekend_amplification"] = sc.weekend_amplification;
  j["holiday_amplification"] = sc.holiday_amplification;
  j["coupling"] = sc.coupling;
  j["unspec_coupling"] = sc.unspec_coupling;
  j["event_trips_per_kmh"] = sc.event_trips_per_kmh;
  j["lead_min_hours"] = sc.lead_min_hours;
  j["lead_max_hours"] = sc.lead_max_hours;
  j["arrival_anchor_share"] = sc.arrival_anchor_share;
  j["n_events"] = sc.n_events;
  j["corrupt_search_lines"] = sc.corrupt_search_lines;
  j["corrupt_traffic_lines"] = sc.corrupt_traffic_lines;
  j["duplicate_traffic_lines"] = sc.duplicate_traffic_lines;
  j["holidays"] = sc.holidays;
  return j;
}

nlohmann::ordered_json events_json(const std::vector<CongestionEvent>& events) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : events) {
    arr.push_back({{"day", e.day},
                   {"segment", e.segment},
                   {"start_minute", e.start_minute},
                   {"duration_minutes", e.duration_minutes},
                   {"severity", e.severity}});
  }
  return arr;
}

}  // namespace

std::string manifest_to_json(const Manifest& m, const Scenario& sc) {
  nlohmann::ordered_json j;
  j["format"] = "routefed-synth/1";
  j["scenario"] = scenario_json(sc);
  j["seed"] = m.seed;
  j["segments"] = m.segments;
  j["counts"] = {{"traffic_records", m.traffic_records},
                 {"traffic_withheld", m.traffic_withheld},
                 {"search_records", m.search_records},
                 {"time_specified", m.time_specified},
                 {"non_time_specified", m.non_time_specified},
                 {"baseline_searches", m.baseline_searches},
                 {"leisure_searches", m.leisure_searches},
                 {"event_searches", m.event_searches},
                 {"corrupt_search_lines", m.corrupt_search_lines},
                 {"corrupt_traffic_lines", m.corrupt_traffic_lines},
                 {"duplicate_traffic_lines", m.duplicate_traffic_lines}};
  j["events"] = events_json(m.events);
  j["holidays"] = m.holidays;
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  Scenario sc;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& s = j.contains("scenario") ? j.at("scenario") : j;
    auto get = [&s](const char* key, auto& field) {
      if (s.contains(key)) field = s.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    get("seed", sc.seed);
    get("n_ics", sc.n_ics);
    get("n_days", sc.n_days);
    if (s.contains("start")) {
      const auto t = parse_date(s.at("start").get<std::string>());
      if (!t) throw Error(ErrorCode::kInvalidScenario, "bad scenario start date");
      sc.start = *t;
    }
    get("road_code", sc.road_code);
    get("free_speed_kmh", sc.free_speed_kmh);
    get("weekday_peak_drop", sc.weekday_peak_drop);
    get("weekend_peak_drop", sc.weekend_peak_drop);
    get("holiday_factor", sc.holiday_factor);
    get("base_volume", sc.base_volume);
    get("speed_noise", sc.speed_noise);
    get("volume_noise", sc.volume_noise);
    get("day_offset_coef", sc.day_offset_coef);
    get("day_offset_sd", sc.day_offset_sd);
    get("missing_rate", sc.missing_rate);
    get("spec_searches_per_day", sc.spec_searches_per_day);
    get("unspec_searches_per_day", sc.unspec_searches_per_day);
    get("weekend_amplification", sc.weekend_amplification);
    get("holiday_amplification", sc.holiday_amplification);
    get("coupling", sc.coupling);
    get("unspec_coupling", sc.unspec_coupling);
    get("event_trips_per_kmh", sc.event_trips_per_kmh);
    get("lead_min_hours", sc.lead_min_hours);
    get("lead_max_hours", sc.lead_max_hours);
    get("arrival_anchor_share", sc.arrival_anchor_share);
    get("n_events", sc.n_events);
    get("corrupt_search_lines", sc.corrupt_search_lines);
    get("corrupt_traffic_lines", sc.corrupt_traffic_lines);
    get("duplicate_traffic_lines", sc.duplicate_traffic_lines);
    get("holidays", sc.holidays);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidScenario, std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

void write_to_directory(const SyntheticData& data, const Scenario& scenario,
                        const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("ics.csv");
    write_ic_csv(out, data.graph);
  }
  {
    auto out = open("network.csv");
    write_network_csv(out, data.graph);
  }
  {
    auto out = open("holidays.csv");
    write_holiday_calendar(out, data.holidays);
  }
  open("traffic.csv") << data.traffic_csv;
  open("search.csv") << data.search_csv;
  open("manifest.json") << manifest_to_json(data.manifest, scenario);
}

}  // namespace routefed::synth
