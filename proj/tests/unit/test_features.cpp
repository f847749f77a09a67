#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "pipeline.hpp"
#include "routefed/error.hpp"
#include "routefed/features.hpp"
#include "routefed/synthlab.hpp"

using namespace routefed;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

HolidayCalendar jp_calendar() {
  HolidayCalendar cal;
  for (const auto& [d, name] : synth::japanese_holidays()) cal.add(*parse_date(d), name);
  return cal;
}

const fixture::Prepared& shared_prepared() {
  static const fixture::Prepared p = fixture::prepare(fixture::tiny_scenario(4, 6));
  return p;
}

}  // namespace

TEST(Calendar, KnownDates) {
  const auto cal = jp_calendar();
  const auto may3 = calendar_features(*parse_timestamp("2022-05-03 08:30"), cal);
  EXPECT_EQ(may3.is_holiday, 1);
  EXPECT_EQ(may3.hour, 8);
  const auto may14 = calendar_features(*parse_date("2022-05-14"), cal);
  EXPECT_EQ(may14.dayofweek, 5);
  EXPECT_EQ(may14.is_holiday, 0);
  EXPECT_EQ(may14.hour, 0);
}

TEST(Calendar, CsvRoundTrip) {
  const auto cal = jp_calendar();
  std::stringstream s;
  write_holiday_calendar(s, cal);
  const auto back = read_holiday_calendar(s);
  EXPECT_EQ(back.entries(), cal.entries());
}

TEST(PoolingRatio, Examples) {
  EXPECT_EQ(pooling_ratio(5, 60), 12);
  EXPECT_EQ(pooling_ratio(15, 60), 4);
  EXPECT_EQ(pooling_ratio(60, 60), 1);
  try {
    pooling_ratio(7, 60);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotDivisible);
  }
}

TEST(FillGaps, CarriesForwardShortGapsOnly) {
  std::vector<double> v{kNaN, 1, kNaN, kNaN, kNaN, 2, kNaN, kNaN, kNaN, kNaN, 3};
  EXPECT_EQ(fill_short_gaps(v, 3), 3u);
  EXPECT_TRUE(std::isnan(v[0]));
  EXPECT_EQ(v[2], 1);
  EXPECT_EQ(v[4], 1);
  for (int i = 6; i < 10; ++i) EXPECT_TRUE(std::isnan(v[static_cast<std::size_t>(i)]));
}

TEST(Assembly, ShapesAndGroups) {
  const auto& ds = shared_prepared().dataset;
  EXPECT_EQ(ds.segments(), 6u);
  EXPECT_EQ(ds.group(GroupName::kTraffic).data.time, 6u * 288);
  EXPECT_EQ(ds.group(GroupName::kTraffic).data.features, 3u);
  EXPECT_EQ(ds.group(GroupName::kSearchSpec).data.time, 6u * 288);
  EXPECT_EQ(ds.group(GroupName::kSearchUnspec).data.time, 6u * 24);
  EXPECT_EQ(ds.group(GroupName::kSearchUnspec).data.features, 4u);
  EXPECT_EQ(ds.group(GroupName::kCalendar).data.time, 6u * 24);
  EXPECT_TRUE(ds.group(GroupName::kStatic).is_static());
  EXPECT_EQ(ds.target_grid.len, 6u * 24);
}

TEST(Assembly, TargetIsHourlyMeanSpeed) {
  const auto& p = shared_prepared();
  const auto& ds = p.dataset;
  const auto& tr = ds.group(GroupName::kTraffic);
  for (std::size_t k = 0; k < ds.segments(); ++k) {
    for (std::size_t h = 0; h < 10; ++h) {
      double s = 0.0;
      for (std::size_t j = 0; j < 12; ++j) s += tr.data.at(k, h * 12 + j, 1);
      EXPECT_NEAR(ds.target_at(k, h), s / 12.0, 1e-9);
    }
  }
}

TEST(Normalizer, MatchesTwoPassStatsAndRoundTrips) {
  const auto& ds = shared_prepared().dataset;
  const EpochMinutes fit_end = ds.start + 4 * kMinutesPerDay;
  const auto state = fit_normalizer(ds, fit_end);
  const auto& tr = ds.group(GroupName::kTraffic);
  for (std::size_t f = 0; f < 3; ++f) {
    std::vector<double> v;
    for (std::size_t k = 0; k < ds.segments(); ++k) {
      for (std::size_t t = 0; t < 4 * 288; ++t) v.push_back(tr.data.at(k, t, f));
    }
    const auto ref = oracle::two_pass_stats(v);
    EXPECT_NEAR(state.inputs.at(GroupName::kTraffic)[f].mean, ref.mean, 1e-12 * (1 + std::abs(ref.mean)));
    EXPECT_NEAR(state.inputs.at(GroupName::kTraffic)[f].stddev, ref.stddev, 1e-12 * (1 + ref.stddev));
  }
  const auto norm = apply_normalizer(ds, state);
  for (std::size_t i = 0; i < ds.target.size(); ++i) {
    EXPECT_NEAR(invert_target(state, norm.target[i]), ds.target[i], 1e-9);
  }
  // Standardized training span has zero mean and unit spread.
  const auto& ntr = norm.group(GroupName::kTraffic);
  std::vector<double> v;
  for (std::size_t k = 0; k < ds.segments(); ++k) {
    for (std::size_t t = 0; t < 4 * 288; ++t) v.push_back(ntr.data.at(k, t, 1));
  }
  const auto s = oracle::two_pass_stats(v);
  EXPECT_NEAR(s.mean, 0.0, 1e-9);
  EXPECT_NEAR(s.stddev, 1.0, 1e-9);
}

TEST(Normalizer, ConstantFeatureBecomesZeroAndTargetEndpoints) {
  Dataset ds = shared_prepared().dataset;
  auto& tr = ds.groups.front();
  for (std::size_t k = 0; k < tr.data.segments; ++k) {
    for (std::size_t t = 0; t < tr.data.time; ++t) tr.data.at(k, t, 0) = 7.0;
  }
  const auto state = fit_normalizer(ds, ds.start + 2 * kMinutesPerDay);
  EXPECT_EQ(state.inputs.at(GroupName::kTraffic)[0].stddev, kStddevFloor);
  const auto norm = apply_normalizer(ds, state);
  EXPECT_EQ(norm.groups.front().data.at(0, 5, 0), 0.0);

  NormalizerState s;
  s.target_min = 40;
  s.target_max = 80;
  EXPECT_EQ(normalize_target(s, 40), 0.0);
  EXPECT_EQ(normalize_target(s, 80), 1.0);
}

TEST(Normalizer, DegenerateTargetThrows) {
  Dataset ds = shared_prepared().dataset;
  for (auto& y : ds.target) y = 50.0;
  try {
    fit_normalizer(ds, ds.start + kMinutesPerDay);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateTarget);
  }
}

TEST(Windows, ThreeDaySeriesFirstTargetIsDayTwo) {
  const auto p = fixture::prepare(fixture::tiny_scenario(3, 3));
  const auto w = build_windows(p.dataset, {288, 0, 24}, FeatureSelection::all());
  ASSERT_FALSE(w.samples.empty());
  EXPECT_EQ(w.samples.front().target_day, 1);  // 0-based: the second day
  EXPECT_EQ(w.samples.size(), 2u);
}

TEST(Windows, CountMatchesClosedFormAndNoLeakage) {
  const auto p = fixture::prepare(fixture::tiny_scenario(3, 30));
  for (const WindowSpec spec : {WindowSpec{288, 0, 24}, WindowSpec{288, 6, 24}, WindowSpec{2016, 0, 24},
                                WindowSpec{2016, 6, 24}, WindowSpec{36, 2, 10}}) {
    const auto w = build_windows(p.dataset, spec, FeatureSelection::all());
    // Midnight anchors d = 1..N; the input must start at or after day 0 and the
    // target must end by day N.
    const long in_days = (spec.input_size * 5 + 1439) / 1440;
    const long out_days = (spec.output_size * 60 + 1439) / 1440;
    const long expected = 30 - spec.n_day_interval - out_days - in_days + 1;
    EXPECT_EQ(static_cast<long>(w.anchors), expected);
    EXPECT_EQ(w.samples.size() + w.dropped_missing_input + w.dropped_missing_target, w.anchors);
    for (const auto& s : w.samples) {
      EXPECT_LT(s.input_start + spec.input_size * 5 - 5, s.target_start);
      EXPECT_EQ(s.target_start - s.anchor, spec.n_day_interval * kMinutesPerDay);
      EXPECT_EQ(s.target.size(), p.dataset.segments() * static_cast<std::size_t>(spec.output_size));
    }
  }
}

TEST(Windows, SpanTooShort) {
  const auto p = fixture::prepare(fixture::tiny_scenario(3, 3));
  try {
    build_windows(p.dataset, {288, 6, 24}, FeatureSelection::all());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSpanTooShort);
  }
}

TEST(Windows, DisabledGroupsAreAbsent) {
  const auto& ds = shared_prepared().dataset;
  const auto w = build_windows(ds, {288, 0, 24}, FeatureSelection::parse("traffic"));
  ASSERT_FALSE(w.samples.empty());
  const auto& names = w.samples.front().group_names;
  ASSERT_EQ(names.size(), 2u);
  EXPECT_EQ(names[0], GroupName::kTraffic);
  EXPECT_EQ(names[1], GroupName::kStatic);
}

TEST(Windows, MissingTrafficDropsSamples) {
  auto sc = fixture::tiny_scenario(3, 8);
  sc.missing_rate = 0.05;
  const auto p = fixture::prepare(sc);
  const auto w = build_windows(p.dataset, {288, 0, 24}, FeatureSelection::all());
  EXPECT_GT(w.dropped_missing_input + w.dropped_missing_target, 0u);
  for (const auto& s : w.samples) {
    for (const auto& x : s.inputs) {
      for (const double v : x.data) ASSERT_FALSE(std::isnan(v));
    }
  }
}

TEST(FeatureSelection, ParseAndFormat) {
  const auto s = FeatureSelection::parse("traffic,search_unspec");
  EXPECT_TRUE(s.traffic && s.search_unspec && !s.time && !s.search);
  EXPECT_EQ(s.to_string(), "traffic,search_unspec");
  EXPECT_EQ(FeatureSelection::parse(FeatureSelection::all().to_string()), FeatureSelection::all());
  EXPECT_THROW(FeatureSelection::parse("traffic,weather"), Error);
}

TEST(Dataset, PersistenceRoundTrip) {
  const auto& ds = shared_prepared().dataset;
  const auto state = fit_normalizer(ds, ds.start + 3 * kMinutesPerDay);
  const auto dir = std::filesystem::temp_directory_path() / "routefed_dataset_test";
  std::filesystem::remove_all(dir);
  write_dataset(ds, dir.string(), &state);
  std::optional<NormalizerState> back_state;
  const auto back = read_dataset(dir.string(), &back_state);
  ASSERT_TRUE(back_state);
  EXPECT_EQ(back.segment_ids, ds.segment_ids);
  ASSERT_EQ(back.groups.size(), ds.groups.size());
  for (std::size_t i = 0; i < ds.groups.size(); ++i) {
    EXPECT_EQ(back.groups[i].data, ds.groups[i].data);
    EXPECT_EQ(back.groups[i].feature_names, ds.groups[i].feature_names);
  }
  EXPECT_EQ(back_state->target_min, state.target_min);
  EXPECT_EQ(back_state->inputs.at(GroupName::kTraffic)[1].mean,
            state.inputs.at(GroupName::kTraffic)[1].mean);
  std::filesystem::remove_all(dir);
}
