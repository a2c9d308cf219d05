#pragma once

// Sliding-window next-step datasets built from per-day collection windows.
// Windows never straddle two collection days.

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/core.hpp"

namespace failslow::neural {

enum class FeatureSet { Latency, LatencyThroughput };

std::size_t feature_count(FeatureSet set);

// Per-feature min-max scaling to [0, 1] with bounds from training data only.
// A constant feature (max == min) maps every value to 0.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  // rows: n x features, row-major.
  static MinMaxScaler fit(std::span<const double> rows, std::size_t features);
  double transform(double v, std::size_t feature) const;
  void transform_inplace(std::span<double> rows) const;

  nlohmann::json to_json() const;
  static MinMaxScaler from_json(const nlohmann::json& j);
};

struct SequenceWindow {
  std::size_t disk = 0;  // index into SequenceDataset::disks
  Date date;
  std::vector<double> input;   // window x features, time-major
  std::vector<double> target;  // next step, features
};

struct SequenceOptions {
  std::size_t window = 32;
  FeatureSet features = FeatureSet::Latency;
  std::size_t train_stride = 1;
  std::size_t test_stride = 1;
};

struct SequenceDataset {
  SequenceOptions options;
  MinMaxScaler scaler;
  std::vector<DiskId> disks;
  std::vector<SequenceWindow> train;
  std::vector<SequenceWindow> test;
  std::vector<DiskId> excluded;  // fewer than window + 1 training samples in every day

  std::size_t features() const { return feature_count(options.features); }
  std::optional<std::size_t> disk_index(const DiskId& id) const;
};

using WindowsByDisk = std::map<DiskId, std::vector<DailyWindow>>;

// All (input, next-step target) pairs of a row-major series of `features`
// columns, taking every `stride`-th window start.
std::vector<std::pair<std::vector<double>, std::vector<double>>> sliding_windows(std::span<const double> series,
                                                                                 std::size_t features,
                                                                                 std::size_t window,
                                                                                 std::size_t stride = 1);

// Scaler is fitted on the training windows' samples unless `fixed_scaler` is
// given (used when re-applying a trained model). Throws Error{Config} for
// window < 1 or a zero stride.
SequenceDataset build_sequences(const WindowsByDisk& train, const WindowsByDisk& test, const SequenceOptions& options,
                                const MinMaxScaler* fixed_scaler = nullptr);

}  // namespace failslow::neural
