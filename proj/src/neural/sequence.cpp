#include "failslow/neural/sequence.hpp"

#include <algorithm>
#include <limits>

namespace failslow::neural {
namespace {

void append_features(const Sample& s, FeatureSet set, std::vector<double>& out) {
  out.push_back(s.latency);
  if (set == FeatureSet::LatencyThroughput) out.push_back(s.throughput);
}

std::vector<double> day_series(const DailyWindow& w, FeatureSet set) {
  std::vector<double> out;
  out.reserve(w.samples.size() * feature_count(set));
  for (const auto& s : w.samples) append_features(s, set, out);
  return out;
}

}  // namespace

std::size_t feature_count(FeatureSet set) { return set == FeatureSet::Latency ? 1 : 2; }

MinMaxScaler MinMaxScaler::fit(std::span<const double> rows, std::size_t features) {
  if (features == 0 || rows.empty() || rows.size() % features != 0) {
    throw Error(ErrorKind::EmptyInput, "scaler needs at least one complete row");
  }
  MinMaxScaler s;
  s.min.assign(features, std::numeric_limits<double>::infinity());
  s.max.assign(features, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t f = i % features;
    s.min[f] = std::min(s.min[f], rows[i]);
    s.max[f] = std::max(s.max[f], rows[i]);
  }
  return s;
}

double MinMaxScaler::transform(double v, std::size_t feature) const {
  const double range = max[feature] - min[feature];
  if (!(range > 0.0)) return 0.0;
  return (v - min[feature]) / range;
}

void MinMaxScaler::transform_inplace(std::span<double> rows) const {
  const std::size_t features = min.size();
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = transform(rows[i], i % features);
}

nlohmann::json MinMaxScaler::to_json() const { return {{"min", min}, {"max", max}}; }

MinMaxScaler MinMaxScaler::from_json(const nlohmann::json& j) {
  MinMaxScaler s;
  s.min = j.at("min").get<std::vector<double>>();
  s.max = j.at("max").get<std::vector<double>>();
  if (s.min.size() != s.max.size() || s.min.empty()) throw Error(ErrorKind::Parse, "malformed scaler");
  return s;
}

std::optional<std::size_t> SequenceDataset::disk_index(const DiskId& id) const {
  const auto it = std::lower_bound(disks.begin(), disks.end(), id);
  if (it == disks.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - disks.begin());
}

std::vector<std::pair<std::vector<double>, std::vector<double>>> sliding_windows(std::span<const double> series,
                                                                                 std::size_t features,
                                                                                 std::size_t window,
                                                                                 std::size_t stride) {
  if (window < 1) throw Error(ErrorKind::Config, "window length must be >= 1");
  if (stride < 1) throw Error(ErrorKind::Config, "stride must be >= 1");
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  const std::size_t steps = series.size() / features;
  if (steps < window + 1) return out;
  for (std::size_t start = 0; start + window < steps; start += stride) {
    const auto* base = series.data() + start * features;
    out.emplace_back(std::vector<double>(base, base + window * features),
                     std::vector<double>(base + window * features, base + (window + 1) * features));
  }
  return out;
}

SequenceDataset build_sequences(const WindowsByDisk& train, const WindowsByDisk& test, const SequenceOptions& options,
                                const MinMaxScaler* fixed_scaler) {
  if (options.window < 1) throw Error(ErrorKind::Config, "window length must be >= 1");
  if (options.train_stride < 1 || options.test_stride < 1) throw Error(ErrorKind::Config, "strides must be >= 1");
  const std::size_t features = feature_count(options.features);

  SequenceDataset ds;
  ds.options = options;

  // Disks qualify when some training day holds at least window + 1 samples.
  for (const auto& [id, days] : train) {
    const bool enough = std::any_of(days.begin(), days.end(), [&](const DailyWindow& w) {
      return w.samples.size() >= options.window + 1;
    });
    (enough ? ds.disks : ds.excluded).push_back(id);
  }
  for (const auto& [id, days] : test) {
    if (!train.contains(id)) ds.excluded.push_back(id);
  }
  std::sort(ds.excluded.begin(), ds.excluded.end());
  if (ds.disks.empty()) {
    throw Error(ErrorKind::EmptyInput, "no disk has a training day with at least " +
                                           std::to_string(options.window + 1) + " samples");
  }

  if (fixed_scaler) {
    if (fixed_scaler->min.size() != features) throw Error(ErrorKind::Shape, "scaler feature count mismatch");
    ds.scaler = *fixed_scaler;
  } else {
    std::vector<double> all;
    for (const auto& id : ds.disks) {
      for (const auto& w : train.at(id)) {
        const auto series = day_series(w, options.features);
        all.insert(all.end(), series.begin(), series.end());
      }
    }
    ds.scaler = MinMaxScaler::fit(all, features);
  }

  auto emit = [&](const WindowsByDisk& source, std::size_t stride, std::vector<SequenceWindow>& out) {
    for (std::size_t d = 0; d < ds.disks.size(); ++d) {
      const auto it = source.find(ds.disks[d]);
      if (it == source.end()) continue;
      for (const auto& w : it->second) {
        auto series = day_series(w, options.features);
        ds.scaler.transform_inplace(series);
        for (auto& [input, target] : sliding_windows(series, features, options.window, stride)) {
          out.push_back(SequenceWindow{d, w.date, std::move(input), std::move(target)});
        }
      }
    }
  };
  emit(train, options.train_stride, ds.train);
  emit(test, options.test_stride, ds.test);
  return ds;
}

}  // namespace failslow::neural
