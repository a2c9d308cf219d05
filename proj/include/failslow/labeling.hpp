#pragma once

// Peer-relative 3-sigma labeling and per-window snapshot statistics.

#include <map>
#include <span>
#include <vector>

#include "failslow/core.hpp"

namespace failslow {

struct SigmaThreshold {
  double mean = 0.0;
  double std = 0.0;  // population
  double k = 3.0;
  double threshold = 0.0;  // mean + k * std
};

SigmaThreshold compute_sigma_threshold(std::span<const double> values, double k = 3.0);

double mean_latency(const DailyWindow& window);

// T iff the window's mean latency exceeds the sigma threshold of the peer
// windows' mean latencies. Peers are the same host's disks on the same date
// (the target may be included).
FaultLabel label_window(const DailyWindow& window, std::span<const DailyWindow> peers,
                        double k = 3.0);

// Labels every (disk, date) by grouping windows on (cluster, host, date).
std::vector<FaultLabel> label_fleet(const std::vector<DailyWindow>& windows, double k = 3.0);

SnapshotFeatures extract_snapshot_features(const DailyWindow& window);
SnapshotFeatures extract_snapshot_features(std::span<const Sample> samples);

// Days from train_start to the first T label (1-based), 0 when the disk has
// no T within [train_start, train_end].
std::map<DiskId, CsrLabel> csr_labels(const std::map<DiskId, std::vector<DailyWindow>>& train_windows,
                                      const std::vector<FaultLabel>& truth);

}  // namespace failslow
