#include <gtest/gtest.h>

#include <set>

#include "failslow/core.hpp"
#include "failslow/rng.hpp"

using namespace failslow;

TEST(DiskId, RoundTripsThroughText) {
  const auto id = DiskId::make('C', "h042", 11);
  EXPECT_EQ(id.str(), "C/h042/11");
  EXPECT_EQ(DiskId::parse("C/h042/11"), id);
}

TEST(DiskId, RejectsOutOfRangeParts) {
  EXPECT_THROW(DiskId::make('Z', "h", 0), Error);
  EXPECT_THROW(DiskId::make('A', "h", 12), Error);
  EXPECT_THROW(DiskId::make('A', "h", -1), Error);
  EXPECT_FALSE(DiskId::parse("A/h1/12"));
  EXPECT_FALSE(DiskId::parse("A//3"));
  EXPECT_FALSE(DiskId::parse("AA/h1/3"));
  EXPECT_FALSE(DiskId::parse("A/h1/x"));
}

TEST(DiskId, OrdersByClusterHostDisk) {
  EXPECT_LT(DiskId::make('A', "h1", 11), DiskId::make('A', "h2", 0));
  EXPECT_LT(DiskId::make('A', "h9", 0), DiskId::make('B', "h0", 0));
  EXPECT_LT(DiskId::make('A', "h1", 2), DiskId::make('A', "h1", 3));
}

TEST(Date, ConvertsCalendarAndTimestamps) {
  const Date d = Date::from_ymd(2024, 2, 29);
  EXPECT_EQ(d.iso(), "2024-02-29");
  EXPECT_EQ(Date::parse("2024-02-29"), d);
  EXPECT_EQ((d + 1).iso(), "2024-03-01");
  EXPECT_EQ(Date::from_ymd(2024, 3, 1) - Date::from_ymd(2024, 1, 1), 60);
  EXPECT_EQ(Date::from_timestamp(1704067200).iso(), "2024-01-01");
  EXPECT_EQ(Date::from_timestamp(1704067199).iso(), "2023-12-31");
  EXPECT_EQ(Date::from_timestamp(-1).iso(), "1969-12-31");
  EXPECT_FALSE(Date::parse("2023-02-29"));
  EXPECT_FALSE(Date::parse("2024-1-01"));
}

TEST(CollectionHours, NinePmInclusiveMidnightExclusive) {
  const CollectionHours h;
  const std::int64_t day = Date::from_ymd(2024, 1, 1).epoch_seconds();
  EXPECT_FALSE(h.contains(day + 21 * 3600 - 1));
  EXPECT_TRUE(h.contains(day + 21 * 3600));
  EXPECT_TRUE(h.contains(day + 24 * 3600 - 1));
  EXPECT_FALSE(h.contains(day + 24 * 3600));
}

TEST(CollectionHours, OffsetShiftsTheLocalClock) {
  CollectionHours h;
  h.utc_offset_s = -5 * 3600;  // 02:00 UTC is 21:00 the previous local day
  const std::int64_t t = Date::from_ymd(2024, 1, 2).epoch_seconds() + 2 * 3600;
  EXPECT_TRUE(h.contains(t));
  EXPECT_EQ(h.local_date(t).iso(), "2024-01-01");
}

TEST(WindowSplit, FullDayHolds720Samples) {
  DiskTrace trace{DiskId::make('A', "h000", 0), {}};
  const std::int64_t day = Date::from_ymd(2024, 1, 1).epoch_seconds();
  for (std::int64_t t = day; t < day + 2 * 86400; t += 15) trace.samples.push_back({t, 1.0, 100.0});
  const auto windows = window_split(trace);
  ASSERT_EQ(windows.size(), 2u);
  EXPECT_EQ(windows[0].samples.size(), 720u);
  EXPECT_EQ(windows[1].samples.size(), 720u);
  EXPECT_EQ(windows[0].date.iso(), "2024-01-01");
  EXPECT_EQ(windows[0].samples.front().timestamp, day + 21 * 3600);
}

TEST(WindowSplit, EmptyTraceIsAnError) {
  DiskTrace trace{DiskId::make('A', "h000", 0), {}};
  EXPECT_THROW(window_split(trace), Error);
}

TEST(TrainTestSplit, SplitDayGoesToTraining) {
  std::vector<DailyWindow> windows;
  const Date d0 = Date::from_ymd(2024, 1, 1);
  for (int i = 0; i < 5; ++i) windows.push_back({DiskId::make('A', "h", 0), d0 + i, {{0, 1.0, 1.0}}});
  const auto split = train_test_split(windows, d0 + 2);
  EXPECT_EQ(split.train.size(), 3u);
  EXPECT_EQ(split.test.size(), 2u);
  try {
    train_test_split(windows, d0 + 5);
    FAIL() << "expected InvalidSplit";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidSplit);
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(17), b(17);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, DerivedSeedsDifferPerComponent) {
  std::set<std::uint64_t> seeds;
  for (const char* name : {"gen", "detector/lstm", "detector/svm", "faults"}) seeds.insert(derive_seed(5, name));
  EXPECT_EQ(seeds.size(), 4u);
  EXPECT_EQ(derive_seed(5, "gen"), derive_seed(5, "gen"));
  EXPECT_NE(derive_seed(5, "gen"), derive_seed(6, "gen"));
}

TEST(Rng, NormalMomentsAreClose) {
  Rng rng(3);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Rng, PoissonMeanMatchesRate) {
  Rng rng(4);
  double sum = 0;
  for (int i = 0; i < 50000; ++i) sum += rng.poisson(20.0);
  EXPECT_NEAR(sum / 50000, 20.0, 0.1);
}

TEST(Rng, IndexStaysInRange) {
  Rng rng(9);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[rng.index(7)];
  for (int h : hits) EXPECT_GT(h, 850);
}
