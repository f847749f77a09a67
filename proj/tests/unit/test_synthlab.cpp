#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pipeline.hpp"
#include "routefed/analysis.hpp"
#include "routefed/error.hpp"
#include "routefed/synthlab.hpp"

using namespace routefed;

namespace {

ErrorCode validate_code(const synth::Scenario& sc) {
  try {
    sc.validate();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Synth, RegenerationIsByteIdentical) {
  synth::Scenario sc;
  sc.n_ics = 5;
  sc.n_days = 4;
  sc.corrupt_search_lines = 3;
  sc.corrupt_traffic_lines = 2;
  sc.duplicate_traffic_lines = 4;
  sc.missing_rate = 0.02;
  const auto a = synth::generate(sc);
  const auto b = synth::generate(sc);
  EXPECT_EQ(a.traffic_csv, b.traffic_csv);
  EXPECT_EQ(a.search_csv, b.search_csv);
  EXPECT_EQ(synth::manifest_to_json(a.manifest, sc), synth::manifest_to_json(b.manifest, sc));
  sc.seed += 1;
  EXPECT_NE(synth::generate(sc).search_csv, a.search_csv);
}

TEST(Synth, ManifestAddsUp) {
  synth::Scenario sc;
  sc.n_ics = 6;
  sc.n_days = 10;
  sc.missing_rate = 0.05;
  const auto d = synth::generate(sc);
  const auto& m = d.manifest;
  EXPECT_EQ(m.segments, 10u);
  EXPECT_EQ(m.segments, d.graph.segments().size());
  EXPECT_EQ(m.traffic_records, d.traffic.size());
  EXPECT_EQ(m.traffic_records + m.traffic_withheld, m.segments * 10u * 288u);
  EXPECT_EQ(m.search_records, d.searches.size());
  EXPECT_EQ(m.time_specified + m.non_time_specified, m.search_records);
  EXPECT_EQ(m.baseline_searches + m.leisure_searches + m.event_searches, m.search_records);
  EXPECT_EQ(m.events.size(), 10u);
  std::size_t spec = 0;
  for (const auto& r : d.searches) spec += classify(r) == SearchClass::kTimeSpecified;
  EXPECT_EQ(spec, m.time_specified);
  for (std::size_t i = 1; i < d.searches.size(); ++i) {
    EXPECT_LE(d.searches[i - 1].search_time, d.searches[i].search_time);
  }
}

TEST(Synth, CorridorShape) {
  synth::Scenario sc;
  sc.n_ics = 4;
  const RoadGraph g = synth::corridor_graph(sc);
  EXPECT_EQ(g.nodes().size(), 4u);
  ASSERT_EQ(g.segments().size(), 6u);
  for (const auto& s : g.segments()) {
    EXPECT_GE(s.length_km, 2.5);
    EXPECT_LE(s.length_km, 4.5);
  }
  EXPECT_EQ(shortest_route(g, "IC00", "IC03").size(), 3u);
  EXPECT_EQ(shortest_route(g, "IC03", "IC00").size(), 3u);
}

TEST(Synth, NoiseFreeSpeedsFollowProfile) {
  synth::Scenario sc;
  sc.n_ics = 3;
  sc.n_days = 8;
  sc.speed_noise = 0.0;
  sc.day_offset_sd = 0.0;
  sc.n_events = 0;
  const auto d = synth::generate(sc);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < d.graph.segments().size(); ++k) index[d.graph.segments()[k].id] = k;
  ASSERT_FALSE(d.traffic.empty());
  for (const auto& r : d.traffic) {
    ASSERT_EQ(r.speed, synth::profile_speed(sc, d.graph, d.holidays, index.at(r.segment_id),
                                            r.timestamp))
        << r.segment_id << " " << format_timestamp(r.timestamp);
  }
}

TEST(Synth, WeekendLeisureAmplification) {
  synth::Scenario sc;
  sc.n_ics = 4;
  sc.n_days = 140;
  sc.spec_searches_per_day = 0.0;
  sc.unspec_searches_per_day = 200.0;
  sc.weekend_amplification = 2.0;
  sc.n_events = 0;
  const auto d = synth::generate(sc);
  const auto stats = day_type_distribution(d.searches, d.holidays, sc.start_time(), sc.n_days);
  double weekday = 0.0, weekend = 0.0;
  for (const auto& s : stats) {
    if (s.search_class != SearchClass::kNonTimeSpecified) continue;
    if (s.type == DayType::kWeekday) weekday = s.mean;
    if (s.type == DayType::kWeekend) weekend = s.mean;
  }
  ASSERT_GT(weekday, 0.0);
  const double ratio = weekend / weekday;
  EXPECT_GE(ratio, 1.8);
  EXPECT_LE(ratio, 2.2);
}

TEST(Synth, UncoupledSearchesCarryNoSpeedSignal) {
  auto sc = fixture::tiny_scenario(6, 30);
  sc.spec_searches_per_day = 400.0;
  sc.coupling = 0.0;
  sc.unspec_coupling = 0.0;
  sc.n_events = 0;
  const auto p = fixture::prepare(sc);
  EXPECT_LT(std::abs(search_residual_correlation(p.dataset)), 0.1);
}

TEST(Synth, CoupledEventsProduceSignal) {
  auto sc = fixture::tiny_scenario(6, 30);
  sc.spec_searches_per_day = 100.0;
  sc.n_events = 20;
  sc.coupling = 1.0;
  sc.unspec_coupling = 0.0;
  const auto p = fixture::prepare(sc);
  EXPECT_LT(search_residual_correlation(p.dataset), -0.05);
}

TEST(Synth, ExplicitEventsAreUsed) {
  synth::Scenario sc;
  sc.n_ics = 3;
  sc.n_days = 2;
  sc.speed_noise = 0.0;
  sc.day_offset_sd = 0.0;
  sc.events = {{1, 0, 600, 60, 30.0}};
  const auto d = synth::generate(sc);
  ASSERT_EQ(d.manifest.events.size(), 1u);
  EXPECT_EQ(d.manifest.events[0], sc.events[0]);
  const auto& seg = d.graph.segments()[0].id;
  const EpochMinutes t = sc.start_time() + kMinutesPerDay + 630;
  for (const auto& r : d.traffic) {
    if (r.segment_id == seg && r.timestamp == t) {
      EXPECT_LT(r.speed, synth::profile_speed(sc, d.graph, d.holidays, 0, t) - 20.0);
    }
  }
}

TEST(Synth, InvalidScenarios) {
  synth::Scenario ok;
  EXPECT_NO_THROW(ok.validate());
  auto sc = ok;
  sc.n_ics = 1;
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
  sc = ok;
  sc.n_days = 0;
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
  sc = ok;
  sc.coupling = 0.7;
  sc.unspec_coupling = 0.5;
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
  sc = ok;
  sc.missing_rate = 1.0;
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
  sc = ok;
  sc.events = {{0, 999, 0, 10, 5.0}};
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
  sc = ok;
  sc.start = 7;
  EXPECT_EQ(validate_code(sc), ErrorCode::kInvalidScenario);
}

TEST(Synth, ScenarioJsonRoundTrip) {
  synth::Scenario sc;
  sc.seed = 99;
  sc.n_days = 12;
  sc.coupling = 0.25;
  const auto d = synth::generate(sc);
  const auto back = synth::scenario_from_json(synth::manifest_to_json(d.manifest, sc));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.n_days, 12);
  EXPECT_DOUBLE_EQ(back.coupling, 0.25);
  const auto partial = synth::scenario_from_json(R"({"seed": 3, "n_ics": 5})");
  EXPECT_EQ(partial.n_ics, 5);
  EXPECT_EQ(partial.n_days, synth::Scenario{}.n_days);
}

TEST(Synth, WritesDirectory) {
  synth::Scenario sc;
  sc.n_ics = 3;
  sc.n_days = 2;
  const auto d = synth::generate(sc);
  const auto dir = std::filesystem::temp_directory_path() / "routefed_synth_test";
  std::filesystem::remove_all(dir);
  synth::write_to_directory(d, sc, dir.string());
  for (const char* f : {"ics.csv", "network.csv", "traffic.csv", "search.csv", "holidays.csv",
                        "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "search.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), d.search_csv);
  std::filesystem::remove_all(dir);
}
