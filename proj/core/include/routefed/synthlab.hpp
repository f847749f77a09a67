#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "routefed/features.hpp"
#include "routefed/ingestion.hpp"
#include "routefed/network.hpp"
#include "routefed/time.hpp"

namespace routefed::synth {

struct CongestionEvent {
  int day = 0;               // 0-based day of the scenario
  std::size_t segment = 0;   // index into the graph's segments
  int start_minute = 0;      // minute of day
  int duration_minutes = 0;
  double severity = 0.0;     // speed drop in km/h

  bool operator==(const CongestionEvent&) const = default;
};

// Everything that determines a synthetic dataset. Two generate() calls with
// equal scenarios produce byte-identical output.
struct Scenario {
  std::uint64_t seed = 7;
  int n_ics = 16;
  int n_days = 30;
  EpochMinutes start = 0;   // local midnight; 0 means 2022-04-01
  std::string road_code = "E14";

  // Daily speed / volume profile.
  double free_speed_kmh = 90.0;
  double weekday_peak_drop = 14.0;    // km/h at the 08:00 / 18:00 peaks
  double weekend_peak_drop = 24.0;    // km/h at the midday leisure peak
  double holiday_factor = 1.3;        // holidays: weekend profile scaled
  double base_volume = 40.0;          // cars per 5 min at peak activity
  double speed_noise = 2.0;           // km/h, per 5-min bucket
  double volume_noise = 0.08;         // relative
  double day_offset_coef = 0.85;      // AR(1) coefficient of the daily offset
  double day_offset_sd = 2.5;         // km/h innovation
  double missing_rate = 0.0;          // fraction of traffic rows withheld

  // Searches.
  double spec_searches_per_day = 300.0;    // baseline trips that search with a time
  double unspec_searches_per_day = 200.0;  // leisure searches without a time
  double weekend_amplification = 2.0;      // leisure search rate on weekends
  double holiday_amplification = 2.5;      // leisure search rate on holidays
  double coupling = 0.6;          // share of event trips that search with a time
  double unspec_coupling = 0.4;   // share of event trips that search without one
  double event_trips_per_kmh = 3.0;
  double lead_min_hours = 2.0;
  double lead_max_hours = 72.0;
  double arrival_anchor_share = 0.3;

  // Congestion events; if `events` is empty, `n_events` are drawn.
  int n_events = 10;
  std::vector<CongestionEvent> events;

  // Planted defects in the serialized logs.
  int corrupt_search_lines = 0;
  int corrupt_traffic_lines = 0;
  int duplicate_traffic_lines = 0;

  // Holidays used for both the profile and the written calendar. Empty
  // means Japanese national holidays inside the scenario span.
  std::vector<std::string> holidays;

  // Throws kInvalidScenario.
  void validate() const;
  EpochMinutes start_time() const;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t segments = 0;
  std::size_t traffic_records = 0;      // clean rows written
  std::size_t traffic_withheld = 0;     // rows removed by missing_rate
  std::size_t search_records = 0;       // clean rows written
  std::size_t time_specified = 0;
  std::size_t non_time_specified = 0;
  std::size_t baseline_searches = 0;
  std::size_t leisure_searches = 0;
  std::size_t event_searches = 0;
  std::size_t corrupt_search_lines = 0;
  std::size_t corrupt_traffic_lines = 0;
  std::size_t duplicate_traffic_lines = 0;
  std::vector<CongestionEvent> events;
  std::vector<std::string> holidays;
};

struct SyntheticData {
  RoadGraph graph;
  HolidayCalendar holidays;
  std::vector<TrafficRecord> traffic;
  std::vector<SearchRecord> searches;
  std::string traffic_csv;   // serialized, including planted defects
  std::string search_csv;
  Manifest manifest;
};

SyntheticData generate(const Scenario& scenario);

// Linear corridor of n_ics ICs with one segment per direction between
// neighbours; forward segments first.
RoadGraph corridor_graph(const Scenario& scenario);

// Noise-free, event-free speed of segment `k` at time t, quantized exactly
// as the generator writes it. With speed_noise = 0, day_offset_sd = 0 and
// no events, generated speeds equal this value.
double profile_speed(const Scenario& scenario, const RoadGraph& graph,
                     const HolidayCalendar& holidays, std::size_t k, EpochMinutes t);

// Japanese national holidays 2021-2024.
const std::vector<std::pair<std::string, std::string>>& japanese_holidays();

std::string manifest_to_json(const Manifest& manifest, const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

// ics.csv, network.csv, traffic.csv, search.csv, holidays.csv, manifest.json
void write_to_directory(const SyntheticData& data, const Scenario& scenario,
                        const std::string& dir);

}  // namespace routefed::synth
