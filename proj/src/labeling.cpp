#include "failslow/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace failslow {

SigmaThreshold compute_sigma_threshold(std::span<const double> values, double k) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "sigma threshold of an empty set");
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  // Two-pass variance; exact zero for constant input.
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  return SigmaThreshold{mean, sd, k, mean + k * sd};
}

double mean_latency(const DailyWindow& window) {
  if (window.samples.empty()) {
    throw Error(ErrorKind::EmptyInput, "window " + window.id.str() + " " + window.date.iso() + " is empty");
  }
  double sum = 0.0;
  for (const auto& s : window.samples) sum += s.latency;
  return sum / static_cast<double>(window.samples.size());
}

FaultLabel label_window(const DailyWindow& window, std::span<const DailyWindow> peers, double k) {
  if (peers.empty()) {
    throw Error(ErrorKind::InsufficientPeers, "no peers for " + window.id.str() + " on " + window.date.iso());
  }
  std::vector<double> peer_means;
  peer_means.reserve(peers.size());
  for (const auto& p : peers) peer_means.push_back(mean_latency(p));
  const auto thr = compute_sigma_threshold(peer_means, k);
  const bool faulty = mean_latency(window) > thr.threshold;
  return FaultLabel{window.id, window.date, faulty ? Verdict::T : Verdict::F, faulty ? 1.0 : 0.0};
}

std::vector<FaultLabel> label_fleet(const std::vector<DailyWindow>& windows, double k) {
  using Key = std::tuple<char, std::string, Date>;
  std::map<Key, std::vector<const DailyWindow*>> groups;
  for (const auto& w : windows) groups[{w.id.cluster, w.id.host, w.date}].push_back(&w);

  std::vector<FaultLabel> out;
  out.reserve(windows.size());
  std::vector<DailyWindow> peers;
  for (const auto& [key, members] : groups) {
    peers.clear();
    for (const auto* m : members) peers.push_back(*m);
    for (const auto* m : members) out.push_back(label_window(*m, peers, k));
  }
  std::sort(out.begin(), out.end(), [](const FaultLabel& a, const FaultLabel& b) {
    return std::tie(a.id, a.date) < std::tie(b.id, b.date);
  });
  return out;
}

SnapshotFeatures extract_snapshot_features(std::span<const Sample> samples) {
  if (samples.empty()) throw Error(ErrorKind::EmptyInput, "snapshot features of an empty window");
  const double n = static_cast<double>(samples.size());
  SnapshotFeatures f;
  f.min_lat = f.max_lat = samples.front().latency;
  f.min_tp = f.max_tp = samples.front().throughput;
  double sum_lat = 0.0, sum_tp = 0.0;
  for (const auto& s : samples) {
    sum_lat += s.latency;
    sum_tp += s.throughput;
    f.min_lat = std::min(f.min_lat, s.latency);
    f.max_lat = std::max(f.max_lat, s.latency);
    f.min_tp = std::min(f.min_tp, s.throughput);
    f.max_tp = std::max(f.max_tp, s.throughput);
  }
  // Rounding can push a mean of identical values a ulp outside [min, max].
  f.mean_lat = std::clamp(sum_lat / n, f.min_lat, f.max_lat);
  f.mean_tp = std::clamp(sum_tp / n, f.min_tp, f.max_tp);
  double ss_lat = 0.0, ss_tp = 0.0;
  for (const auto& s : samples) {
    ss_lat += (s.latency - f.mean_lat) * (s.latency - f.mean_lat);
    ss_tp += (s.throughput - f.mean_tp) * (s.throughput - f.mean_tp);
  }
  f.std_lat = std::sqrt(ss_lat / n);
  f.std_tp = std::sqrt(ss_tp / n);
  return f;
}

SnapshotFeatures extract_snapshot_features(const DailyWindow& window) {
  return extract_snapshot_features(std::span<const Sample>(window.samples));
}

std::map<DiskId, CsrLabel> csr_labels(const std::map<DiskId, std::vector<DailyWindow>>& train_windows,
                                      const std::vector<FaultLabel>& truth) {
  std::map<DiskId, std::vector<const FaultLabel*>> by_disk;
  for (const auto& l : truth) by_disk[l.id].push_back(&l);

  std::map<DiskId, CsrLabel> out;
  for (const auto& [id, windows] : train_windows) {
    CsrLabel label;
    if (!windows.empty()) {
      Date start = windows.front().date, end = windows.front().date;
      for (const auto& w : windows) {
        start = std::min(start, w.date);
        end = std::max(end, w.date);
      }
      if (auto it = by_disk.find(id); it != by_disk.end()) {
        std::optional<Date> first;
        for (const auto* l : it->second) {
          if (l->verdict == Verdict::T && l->date >= start && l->date <= end && (!first || l->date < *first)) {
            first = l->date;
          }
        }
        if (first) label.days_to_first_error = static_cast<int>(*first - start) + 1;
      }
    }
    out[id] = label;
  }
  return out;
}

}  // namespace failslow
