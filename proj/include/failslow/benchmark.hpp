#pragma once

// Lookback x threshold evaluation of per-disk daily prediction scores against
// ground-truth labels, failure-rate tables and heatmap emission.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "failslow/core.hpp"

namespace failslow::bench {

struct PredictionSet {
  std::string model;
  std::map<std::pair<DiskId, Date>, double> scores;

  // Throws Error{Contract} on a duplicate (disk, date) or a score outside [0, 1].
  void add(const DiskId& disk, Date date, double score);
  void add(const std::vector<FaultLabel>& labels);
  bool empty() const { return scores.empty(); }
};

// CSV: model,cluster,host,disk,date,score. One file may hold several models;
// sets come back in first-appearance order.
void write_predictions_csv(std::ostream& out, const std::vector<PredictionSet>& sets);
std::vector<PredictionSet> parse_predictions_csv(std::istream& in);
std::vector<PredictionSet> parse_predictions_csv(const std::filesystem::path& path);

enum class Aggregation { Max, Mean };

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t predicted_positive() const { return tp + fp; }
  std::optional<double> precision() const;  // nullopt when tp + fp == 0
  std::optional<double> recall() const;     // nullopt when tp + fn == 0
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// Window [eval_date - lookback + 1, eval_date]. A disk is predicted positive
// iff its aggregated score over the window's prediction days is >= threshold
// (no prediction in the window counts as score 0) and actually positive iff
// it has a T label in the window. Disks are those with a prediction or a label
// in the window. Throws Error{EmptyInput} when there are none and
// Error{Config} for lookback < 1.
Confusion evaluate_cell(const PredictionSet& preds, const std::vector<FaultLabel>& truth, Date eval_date, int lookback,
                        double threshold, Aggregation aggregation = Aggregation::Max);

std::vector<int> default_lookbacks();       // 1, 3, 7, 15
std::vector<double> default_thresholds();  // 0.1 .. 1.0

struct BenchGrid {
  std::string model;
  Date eval_date;
  std::vector<int> lookbacks;
  std::vector<double> thresholds;
  std::vector<std::vector<Confusion>> cells;  // [lookback][threshold]
};

enum class Metric { Precision, Recall };
std::string to_string(Metric m);
std::optional<double> metric_value(const Confusion& c, Metric m);

// Throws Error{Config} on empty lookbacks or thresholds.
BenchGrid sweep_grid(const PredictionSet& preds, const std::vector<FaultLabel>& truth, Date eval_date,
                     const std::vector<int>& lookbacks, const std::vector<double>& thresholds,
                     Aggregation aggregation = Aggregation::Max);

struct FailureRate {
  std::size_t total = 0;
  std::size_t failures = 0;

  // Percentage rounded half-up to two decimals, e.g. "3.33".
  std::string percent() const;
};

// Disk-days with score >= threshold among predictions dated within
// [from, to] (all dates when unset). Throws Error{EmptyInput}.
FailureRate failure_rate(const PredictionSet& preds, double threshold, std::optional<Date> from = std::nullopt,
                         std::optional<Date> to = std::nullopt);
FailureRate failure_rate(std::size_t failures, std::size_t total);

// model,rate_percent,total,failures
void write_failure_table(std::ostream& out, const std::vector<std::pair<std::string, FailureRate>>& rows);

// Heatmap CSV: first cell "lookback\threshold", thresholds at one decimal as
// column headers, values at four decimals, undefined cells empty.
struct Heatmap {
  std::vector<int> lookbacks;
  std::vector<std::string> thresholds;
  std::vector<std::vector<std::optional<double>>> values;
};
Heatmap heatmap_of(const BenchGrid& grid, Metric metric);
void write_heatmap_csv(std::ostream& out, const BenchGrid& grid, Metric metric);
Heatmap parse_heatmap_csv(std::istream& in);
std::string format_cell(double v);  // four decimals

// Self-contained SVG; warmer colors are higher values, undefined cells grey.
void write_heatmap_svg(std::ostream& out, const BenchGrid& grid, Metric metric);
std::string heat_color(double v);  // "#rrggbb" for v in [0, 1]

}  // namespace failslow::bench
