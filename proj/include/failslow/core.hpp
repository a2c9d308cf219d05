#pragma once

// Domain types shared by every detector: disk identity, raw telemetry
// samples, per-day collection windows, labels and snapshot features.

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "failslow/error.hpp"

namespace failslow {

inline constexpr int kDisksPerHost = 12;
inline constexpr int kSamplesPerWindow = 720;  // 180 min x 4 samples/min
inline constexpr std::int64_t kDefaultCadenceS = 15;

struct Sample {
  std::int64_t timestamp = 0;  // epoch seconds
  double latency = 0.0;        // ms
  double throughput = 0.0;     // MB/s

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DiskId {
  char cluster = 'A';
  std::string host;
  int disk = 0;

  // Throws Error{Contract} on a cluster outside A..Y or a disk index outside [0, 12).
  static DiskId make(char cluster, std::string host, int disk);

  // "A/h000/3"
  std::string str() const;
  static std::optional<DiskId> parse(std::string_view text);

  friend bool operator==(const DiskId&, const DiskId&) = default;
  friend std::strong_ordering operator<=>(const DiskId&, const DiskId&) = default;
};

// Calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}
  static Date from_ymd(int year, unsigned month, unsigned day);
  static Date from_timestamp(std::int64_t epoch_seconds);
  // Strict YYYY-MM-DD.
  static std::optional<Date> parse(std::string_view iso);

  constexpr std::int64_t days() const { return days_; }
  std::int64_t epoch_seconds() const { return days_ * 86400; }
  std::string iso() const;

  constexpr Date operator+(std::int64_t n) const { return Date(days_ + n); }
  constexpr Date operator-(std::int64_t n) const { return Date(days_ - n); }
  constexpr std::int64_t operator-(Date other) const { return days_ - other.days_; }

  friend constexpr bool operator==(Date, Date) = default;
  friend constexpr std::strong_ordering operator<=>(Date, Date) = default;

 private:
  std::int64_t days_ = 0;
};

struct DiskTrace {
  DiskId id;
  std::vector<Sample> samples;  // sorted by timestamp

  friend bool operator==(const DiskTrace&, const DiskTrace&) = default;
};

struct DailyWindow {
  DiskId id;
  Date date;
  std::vector<Sample> samples;
};

enum class Verdict : std::uint8_t { F, T };

char to_char(Verdict v);

struct FaultLabel {
  DiskId id;
  Date date;
  Verdict verdict = Verdict::F;
  double score = 0.0;

  friend bool operator==(const FaultLabel&, const FaultLabel&) = default;
};

struct SnapshotFeatures {
  double mean_lat = 0, min_lat = 0, max_lat = 0, std_lat = 0;
  double mean_tp = 0, min_tp = 0, max_tp = 0, std_tp = 0;

  static constexpr std::size_t kCount = 8;
  static const std::vector<std::string>& names();
  std::vector<double> to_vector() const;
};

struct CsrLabel {
  int days_to_first_error = 0;  // 0: no fault in the training segment
};

// Collection window bounds as seconds-of-day in the trace's local clock.
struct CollectionHours {
  std::int64_t begin_s = 21 * 3600;
  std::int64_t end_s = 24 * 3600;  // exclusive
  std::int64_t utc_offset_s = 0;   // added to timestamps before bucketing

  bool contains(std::int64_t timestamp) const;
  Date local_date(std::int64_t timestamp) const;
};

// Buckets a trace into per-day collection windows, dropping out-of-window
// samples. Throws Error{EmptyInput} for an empty trace.
std::vector<DailyWindow> window_split(const DiskTrace& trace, const CollectionHours& hours = {});

struct TrainTestSplit {
  std::vector<DailyWindow> train;
  std::vector<DailyWindow> test;
};

// train: date <= split_day; test: date > split_day. split_day must lie in
// [first window date, last window date] or Error{InvalidSplit} is thrown.
TrainTestSplit train_test_split(const DiskTrace& trace, Date split_day,
                                const CollectionHours& hours = {});
TrainTestSplit train_test_split(std::vector<DailyWindow> windows, Date split_day);

}  // namespace failslow
