#include "failslow/core.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>

namespace failslow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::InvalidSplit: return "invalid-split";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::Config: return "config";
    case ErrorKind::InsufficientPeers: return "insufficient-peers";
    case ErrorKind::DegenerateTraining: return "degenerate-training";
    case ErrorKind::UnknownDisk: return "unknown-disk";
    case ErrorKind::Protocol: return "protocol";
    case ErrorKind::OverBudget: return "over-budget";
    case ErrorKind::InvalidFolds: return "invalid-folds";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

DiskId DiskId::make(char cluster, std::string host, int disk) {
  if (cluster < 'A' || cluster > 'Y') {
    throw Error(ErrorKind::Contract, std::string("cluster must be A..Y, got '") + cluster + "'");
  }
  if (disk < 0 || disk >= kDisksPerHost) {
    throw Error(ErrorKind::Contract, "disk index must be in [0, 12), got " + std::to_string(disk));
  }
  return DiskId{cluster, std::move(host), disk};
}

std::string DiskId::str() const {
  std::string out;
  out.reserve(host.size() + 6);
  out += cluster;
  out += '/';
  out += host;
  out += '/';
  out += std::to_string(disk);
  return out;
}

std::optional<DiskId> DiskId::parse(std::string_view text) {
  const auto first = text.find('/');
  const auto last = text.rfind('/');
  if (first != 1 || last == first || last + 1 >= text.size()) return std::nullopt;
  const char cluster = text[0];
  if (cluster < 'A' || cluster > 'Y') return std::nullopt;
  std::string host(text.substr(first + 1, last - first - 1));
  if (host.empty()) return std::nullopt;
  int disk = -1;
  const auto tail = text.substr(last + 1);
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), disk);
  if (ec != std::errc() || ptr != tail.data() + tail.size()) return std::nullopt;
  if (disk < 0 || disk >= kDisksPerHost) return std::nullopt;
  return DiskId{cluster, std::move(host), disk};
}

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) throw Error(ErrorKind::Contract, "invalid calendar date");
  return Date(sys_days{ymd}.time_since_epoch().count());
}

Date Date::from_timestamp(std::int64_t epoch_seconds) {
  std::int64_t d = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --d;
  return Date(d);
}

std::optional<Date> Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [](std::string_view s, auto& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (!num(iso.substr(0, 4), y) || !num(iso.substr(5, 2), m) || !num(iso.substr(8, 2), d)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date(sys_days{ymd}.time_since_epoch().count());
}

std::string Date::iso() const {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days_}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

char to_char(Verdict v) { return v == Verdict::T ? 'T' : 'F'; }

const std::vector<std::string>& SnapshotFeatures::names() {
  static const std::vector<std::string> kNames = {"mean_lat", "min_lat", "max_lat", "std_lat",
                                                  "mean_tp",  "min_tp",  "max_tp",  "std_tp"};
  return kNames;
}

std::vector<double> SnapshotFeatures::to_vector() const {
  return {mean_lat, min_lat, max_lat, std_lat, mean_tp, min_tp, max_tp, std_tp};
}

bool CollectionHours::contains(std::int64_t timestamp) const {
  std::int64_t sod = (timestamp + utc_offset_s) % 86400;
  if (sod < 0) sod += 86400;
  return sod >= begin_s && sod < end_s;
}

Date CollectionHours::local_date(std::int64_t timestamp) const {
  return Date::from_timestamp(timestamp + utc_offset_s);
}

std::vector<DailyWindow> window_split(const DiskTrace& trace, const CollectionHours& hours) {
  if (trace.samples.empty()) {
    throw Error(ErrorKind::EmptyInput, "trace " + trace.id.str() + " has no samples");
  }
  std::map<Date, std::vector<Sample>> buckets;
  for (const Sample& s : trace.samples) {
    if (!hours.contains(s.timestamp)) continue;
    buckets[hours.local_date(s.timestamp)].push_back(s);
  }
  std::vector<DailyWindow> out;
  out.reserve(buckets.size());
  for (auto& [date, samples] : buckets) {
    out.push_back(DailyWindow{trace.id, date, std::move(samples)});
  }
  return out;
}

TrainTestSplit train_test_split(std::vector<DailyWindow> windows, Date split_day) {
  if (windows.empty()) throw Error(ErrorKind::EmptyInput, "no windows to split");
  std::stable_sort(windows.begin(), windows.end(),
                   [](const DailyWindow& a, const DailyWindow& b) { return a.date < b.date; });
  if (split_day < windows.front().date || split_day > windows.back().date) {
    throw Error(ErrorKind::InvalidSplit, "split day " + split_day.iso() + " outside [" +
                                             windows.front().date.iso() + ", " +
                                             windows.back().date.iso() + "]");
  }
  TrainTestSplit out;
  for (auto& w : windows) {
    (w.date <= split_day ? out.train : out.test).push_back(std::move(w));
  }
  return out;
}

TrainTestSplit train_test_split(const DiskTrace& trace, Date split_day,
                                const CollectionHours& hours) {
  return train_test_split(window_split(trace, hours), split_day);
}

}  // namespace failslow
