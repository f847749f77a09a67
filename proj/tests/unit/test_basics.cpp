#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "routefed/csv.hpp"
#include "routefed/error.hpp"
#include "routefed/rng.hpp"
#include "routefed/time.hpp"

using namespace routefed;

TEST(Time, ParsesCanonicalAndVariants) {
  const auto a = parse_timestamp("2022-05-03 10:15");
  ASSERT_TRUE(a);
  EXPECT_EQ(format_timestamp(*a), "2022-05-03 10:15");
  EXPECT_EQ(parse_timestamp("2022-05-03T10:15"), a);
  EXPECT_EQ(parse_timestamp("2022-05-03 10:15:59"), a);
  EXPECT_FALSE(parse_timestamp("2022-13-03 10:15"));
  EXPECT_FALSE(parse_timestamp("2022-02-30 10:15"));
  EXPECT_FALSE(parse_timestamp("2022-05-03 24:00"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
}

TEST(Time, EpochAndCalendarArithmetic) {
  EXPECT_EQ(*parse_date("1970-01-01"), 0);
  EXPECT_EQ(*parse_date("1970-01-02"), kMinutesPerDay);
  EXPECT_EQ(day_of_week(*parse_date("1970-01-01")), 3);  // Thursday
  EXPECT_EQ(day_of_week(*parse_date("2022-05-14")), 5);
  EXPECT_EQ(day_of_week(*parse_date("1969-12-31")), 2);
  EXPECT_EQ(day_index(-1), -1);
  EXPECT_EQ(hour_of_day(*parse_timestamp("2022-05-03 23:59")), 23);
  EXPECT_EQ(format_date(*parse_timestamp("2024-02-29 12:00")), "2024-02-29");
}

TEST(Time, RoundTripsEveryDayOverFiveYears) {
  const EpochMinutes start = *parse_date("2020-01-01");
  for (int d = 0; d < 5 * 366; ++d) {
    const EpochMinutes t = start + d * kMinutesPerDay + 7 * 60 + 5;
    EXPECT_EQ(parse_timestamp(format_timestamp(t)), t);
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, DistributionsHaveExpectedMoments) {
  Rng r(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sp = 0;
  std::set<std::uint64_t> seen;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
    sp += static_cast<double>(r.poisson(45.0));
    const auto k = r.below(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
  EXPECT_NEAR(sp / n, 45.0, 0.1);
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Csv, SplitsQuotedFields) {
  const auto f = csv::split_line(R"(a,"b,c","d""e",)");
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
  EXPECT_EQ(f[3], "");
  EXPECT_EQ(csv::escape("b,c"), "\"b,c\"");
  EXPECT_EQ(csv::escape("plain"), "plain");
}

TEST(Csv, DoublesRoundTrip) {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.normal(0.0, 1e3);
    EXPECT_EQ(*csv::parse_double(csv::format_double(v)), v);
  }
  EXPECT_EQ(csv::format_double(std::nan("")), "NA");
  EXPECT_FALSE(csv::parse_double("1.5x"));
  EXPECT_FALSE(csv::parse_int("3.0"));
  EXPECT_EQ(*csv::parse_int("-12"), -12);
}

TEST(Error, CarriesCode) {
  try {
    throw Error(ErrorCode::kNoRoute, "x");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoRoute);
    EXPECT_EQ(to_string(e.code()), "NoRoute");
  }
}
