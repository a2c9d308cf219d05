#include "failslow/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>

#include "failslow/csv.hpp"

namespace failslow::bench {
namespace {

constexpr std::string_view kPredictionHeader = "model,cluster,host,disk,date,score";
constexpr std::string_view kCorner = "lookback\\threshold";

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void PredictionSet::add(const DiskId& disk, Date date, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorKind::Contract, "score " + std::to_string(score) + " for " + disk.str() + " outside [0, 1]");
  }
  if (!scores.emplace(std::make_pair(disk, date), score).second) {
    throw Error(ErrorKind::Contract, "duplicate prediction for " + disk.str() + " on " + date.iso());
  }
}

void PredictionSet::add(const std::vector<FaultLabel>& labels) {
  for (const auto& l : labels) add(l.id, l.date, l.score);
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionSet>& sets) {
  out << kPredictionHeader << '\n';
  for (const auto& set : sets) {
    for (const auto& [key, score] : set.scores) {
      out << set.model << ',' << key.first.cluster << ',' << key.first.host << ',' << key.first.disk << ','
          << key.second.iso() << ',' << format_fixed(score, 6) << '\n';
    }
  }
}

std::vector<PredictionSet> parse_predictions_csv(std::istream& in) {
  csv::LineReader reader(in);
  csv::expect_header(reader, kPredictionHeader);
  std::vector<PredictionSet> sets;
  std::map<std::string, std::size_t> index;
  std::string line;
  while (reader.next(line)) {
    const auto ln = reader.line_no();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 6) csv::fail(ln, 0, {}, "expected 6 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) csv::fail(ln, 1, "model", "empty model name");
    if (f[1].size() != 1) csv::fail(ln, 2, "cluster", "expected a single cluster letter");
    if (f[2].empty()) csv::fail(ln, 3, "host", "empty host identifier");
    const auto disk = csv::parse_int(f[3], ln, 4, "disk");
    const auto date = Date::parse(f[4]);
    if (!date) csv::fail(ln, 5, "date", "expected YYYY-MM-DD, got '" + std::string(f[4]) + "'");
    const double score = csv::parse_real(f[5], ln, 6, "score");
    DiskId id;
    try {
      id = DiskId::make(f[1][0], std::string(f[2]), static_cast<int>(disk));
    } catch (const Error& e) {
      csv::fail(ln, 2, "cluster", e.what());
    }
    const std::string model(f[0]);
    auto [it, fresh] = index.emplace(model, sets.size());
    if (fresh) sets.push_back(PredictionSet{model, {}});
    try {
      sets[it->second].add(id, *date, score);
    } catch (const Error& e) {
      csv::fail(ln, 6, "score", e.what());
    }
  }
  return sets;
}

std::vector<PredictionSet> parse_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_predictions_csv(in);
}

std::optional<double> Confusion::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> Confusion::recall() const {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

Confusion evaluate_cell(const PredictionSet& preds, const std::vector<FaultLabel>& truth, Date eval_date, int lookback,
                        double threshold, Aggregation aggregation) {
  if (lookback < 1) throw Error(ErrorKind::Config, "lookback must be >= 1 day");
  const Date first = eval_date - (lookback - 1);
  auto inside = [&](Date d) { return first <= d && d <= eval_date; };

  struct Acc {
    double max = 0.0, sum = 0.0;
    std::size_t n = 0;
    bool positive = false;
  };
  std::map<DiskId, Acc> disks;
  for (const auto& [key, score] : preds.scores) {
    if (!inside(key.second)) continue;
    auto& a = disks[key.first];
    a.max = a.n == 0 ? score : std::max(a.max, score);
    a.sum += score;
    ++a.n;
  }
  for (const auto& l : truth) {
    if (!inside(l.date)) continue;
    auto& a = disks[l.id];
    if (l.verdict == Verdict::T) a.positive = true;
  }
  if (disks.empty()) {
    throw Error(ErrorKind::EmptyInput, "no predictions or labels between " + first.iso() + " and " + eval_date.iso());
  }

  Confusion c;
  for (const auto& [id, a] : disks) {
    double score = 0.0;
    if (a.n) score = aggregation == Aggregation::Max ? a.max : a.sum / static_cast<double>(a.n);
    const bool predicted = score >= threshold;
    if (predicted && a.positive) ++c.tp;
    else if (predicted) ++c.fp;
    else if (a.positive) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::vector<int> default_lookbacks() { return {1, 3, 7, 15}; }

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(i / 10.0);
  return t;
}

std::string to_string(Metric m) { return m == Metric::Precision ? "precision" : "recall"; }

std::optional<double> metric_value(const Confusion& c, Metric m) {
  return m == Metric::Precision ? c.precision() : c.recall();
}

BenchGrid sweep_grid(const PredictionSet& preds, const std::vector<FaultLabel>& truth, Date eval_date,
                     const std::vector<int>& lookbacks, const std::vector<double>& thresholds,
                     Aggregation aggregation) {
  if (lookbacks.empty()) throw Error(ErrorKind::Config, "no lookbacks given");
  if (thresholds.empty()) throw Error(ErrorKind::Config, "no thresholds given");
  BenchGrid g{preds.model, eval_date, lookbacks, thresholds, {}};
  for (int l : lookbacks) {
    auto& row = g.cells.emplace_back();
    for (double t : thresholds) row.push_back(evaluate_cell(preds, truth, eval_date, l, t, aggregation));
  }
  return g;
}

std::string FailureRate::percent() const {
  if (total == 0) return "0.00";
  // Hundredths of a percent, rounded half up in integer arithmetic.
  const std::uint64_t hundredths = (static_cast<std::uint64_t>(failures) * 20000 + total) / (2 * total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", static_cast<unsigned long long>(hundredths / 100),
                static_cast<unsigned long long>(hundredths % 100));
  return buf;
}

FailureRate failure_rate(std::size_t failures, std::size_t total) {
  if (total == 0) throw Error(ErrorKind::EmptyInput, "failure rate over zero predictions");
  if (failures > total) throw Error(ErrorKind::Contract, "more failures than predictions");
  return {total, failures};
}

FailureRate failure_rate(const PredictionSet& preds, double threshold, std::optional<Date> from,
                         std::optional<Date> to) {
  std::size_t total = 0, failures = 0;
  for (const auto& [key, score] : preds.scores) {
    if ((from && key.second < *from) || (to && key.second > *to)) continue;
    ++total;
    if (score >= threshold) ++failures;
  }
  return failure_rate(failures, total);
}

void write_failure_table(std::ostream& out, const std::vector<std::pair<std::string, FailureRate>>& rows) {
  out << "model,rate_percent,total,failures\n";
  for (const auto& [model, r] : rows) out << model << ',' << r.percent() << ',' << r.total << ',' << r.failures << '\n';
}

std::string format_cell(double v) { return format_fixed(v, 4); }

Heatmap heatmap_of(const BenchGrid& grid, Metric metric) {
  Heatmap h;
  h.lookbacks = grid.lookbacks;
  for (double t : grid.thresholds) h.thresholds.push_back(format_fixed(t, 1));
  for (const auto& row : grid.cells) {
    auto& out = h.values.emplace_back();
    for (const auto& c : row) {
      const auto v = metric_value(c, metric);
      // Values are stored as rendered so a CSV round trip compares exactly.
      out.push_back(v ? std::optional<double>(std::stod(format_cell(*v))) : std::nullopt);
    }
  }
  return h;
}

void write_heatmap_csv(std::ostream& out, const BenchGrid& grid, Metric metric) {
  const Heatmap h = heatmap_of(grid, metric);
  out << kCorner;
  for (const auto& t : h.thresholds) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < h.lookbacks.size(); ++i) {
    out << h.lookbacks[i];
    for (const auto& v : h.values[i]) {
      out << ',';
      if (v) out << format_cell(*v);
    }
    out << '\n';
  }
}

Heatmap parse_heatmap_csv(std::istream& in) {
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line)) csv::fail(1, 0, {}, "missing heatmap header");
  auto header = csv::split(line);
  if (header.empty() || header[0] != kCorner) csv::fail(1, 1, "corner", "expected '" + std::string(kCorner) + "'");
  Heatmap h;
  for (std::size_t i = 1; i < header.size(); ++i) h.thresholds.emplace_back(header[i]);
  while (reader.next(line)) {
    const auto ln = reader.line_no();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != header.size()) csv::fail(ln, 0, {}, "expected " + std::to_string(header.size()) + " fields");
    h.lookbacks.push_back(static_cast<int>(csv::parse_int(f[0], ln, 1, "lookback")));
    auto& row = h.values.emplace_back();
    for (std::size_t i = 1; i < f.size(); ++i) {
      if (f[i].empty()) {
        row.push_back(std::nullopt);
      } else {
        row.push_back(csv::parse_real(f[i], ln, i + 1, h.thresholds[i - 1]));
      }
    }
  }
  return h;
}

std::string heat_color(double v) {
  // Sequential ramp from pale yellow (low) to dark red (high).
  static constexpr int stops[][3] = {{255, 255, 204}, {254, 217, 118}, {253, 141, 60}, {227, 26, 28}, {128, 0, 38}};
  constexpr int n = sizeof stops / sizeof stops[0];
  const double x = std::clamp(v, 0.0, 1.0) * (n - 1);
  const int i = std::min(static_cast<int>(x), n - 2);
  const double f = x - i;
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

void write_heatmap_svg(std::ostream& out, const BenchGrid& grid, Metric metric) {
  const Heatmap h = heatmap_of(grid, metric);
  constexpr int cell_w = 56, cell_h = 36, left = 90, top = 60;
  const int width = left + cell_w * static_cast<int>(h.thresholds.size()) + 20;
  const int height = top + cell_h * static_cast<int>(h.lookbacks.size()) + 50;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << left << "\" y=\"22\" font-size=\"14\">" << xml_escape(grid.model) << " " << to_string(metric)
      << " at " << grid.eval_date.iso() << "</text>\n";
  out << "<text x=\"" << left << "\" y=\"" << height - 12 << "\">threshold</text>\n";
  out << "<text x=\"10\" y=\"" << top - 8 << "\">lookback</text>\n";
  for (std::size_t j = 0; j < h.thresholds.size(); ++j) {
    out << "<text x=\"" << left + cell_w * static_cast<int>(j) + cell_w / 2 << "\" y=\"" << top - 8
        << "\" text-anchor=\"middle\">" << h.thresholds[j] << "</text>\n";
  }
  for (std::size_t i = 0; i < h.lookbacks.size(); ++i) {
    const int y = top + cell_h * static_cast<int>(i);
    out << "<text x=\"" << left - 10 << "\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"end\">" << h.lookbacks[i]
        << "</text>\n";
    for (std::size_t j = 0; j < h.thresholds.size(); ++j) {
      const int x = left + cell_w * static_cast<int>(j);
      const auto& v = h.values[i][j];
      const std::string fill = v ? heat_color(*v) : "#d9d9d9";
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\"" << cell_h
          << "\" fill=\"" << fill << "\" stroke=\"#ffffff\"/>\n";
      const bool dark = v && *v > 0.6;
      out << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
          << (dark ? "#ffffff" : "#000000") << "\">" << (v ? format_fixed(*v, 2) : "n/a") << "</text>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace failslow::bench
