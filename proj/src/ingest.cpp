#include "failslow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "failslow/csv.hpp"
#include "failslow/rng.hpp"

namespace failslow {
namespace {

constexpr std::string_view kTraceHeader = "cluster,host,disk,timestamp_s,latency_ms,throughput_mbps";
constexpr std::string_view kLabelHeader = "cluster,host,disk,date,verdict,score";

double quantize(double v, double scale) { return std::round(v * scale) / scale; }

std::string host_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "h%03d", index);
  return buf;
}

char parse_cluster(std::string_view field, std::size_t line) {
  if (field.size() != 1 || field[0] < 'A' || field[0] > 'Y') {
    csv::fail(line, 1, "cluster", "expected a single letter A..Y, got '" + std::string(field) + "'");
  }
  return field[0];
}

int parse_disk(std::string_view field, std::size_t line) {
  const auto disk = csv::parse_int(field, line, 3, "disk");
  if (disk < 0 || disk >= kDisksPerHost) {
    csv::fail(line, 3, "disk", "disk index must be in [0, 12), got " + std::to_string(disk));
  }
  return static_cast<int>(disk);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string_view to_string(FaultStyle style) {
  return style == FaultStyle::Sustained ? "sustained" : "spiky";
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void ClusterSpec::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
  if (cluster_id < 'A' || cluster_id > 'Y') bad("cluster_id must be a letter A..Y");
  if (n_hosts < 1) bad("n_hosts must be >= 1");
  if (n_days < 1) bad("n_days must be >= 1");
  if (cadence_s < 1) bad("cadence_s must be >= 1");
  if (!(fault_fraction >= 0.0 && fault_fraction <= 1.0)) bad("fault_fraction must be in [0, 1]");
  if (fault_mix.sustained < 0 || fault_mix.spiky < 0 ||
      std::abs(fault_mix.sustained + fault_mix.spiky - 1.0) > 1e-9) {
    bad("fault_mix proportions must be non-negative and sum to 1");
  }
  if (!(sustained_severity > 1.0) || !(spiky_severity > 1.0)) bad("fault severity must be > 1");
  if (spike_rate < 0) bad("spike_rate must be >= 0");
  if (latency_median_ms <= 0 || latency_sigma < 0 || throughput_sd < 0) {
    bad("baseline distribution parameters out of range");
  }
  if (hours.begin_s < 0 || hours.end_s > 86400 || hours.begin_s >= hours.end_s) {
    bad("collection hours must satisfy 0 <= begin < end <= 86400");
  }
}

int fault_count(double fault_fraction, int total_disks) {
  if (fault_fraction <= 0.0 || total_disks <= 0) return 0;
  const int n = static_cast<int>(std::lround(fault_fraction * total_disks));
  return std::clamp(n, 1, total_disks);
}

GeneratedCluster generate_cluster(const ClusterSpec& spec) {
  spec.validate();
  GeneratedCluster out;

  const int total = spec.n_hosts * kDisksPerHost;
  std::vector<int> order(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng fault_rng(derive_seed(spec.seed, "faults"));
  fault_rng.shuffle(order);

  const int n_faults = fault_count(spec.fault_fraction, total);
  const int n_sustained = static_cast<int>(std::lround(n_faults * spec.fault_mix.sustained));
  std::vector<std::optional<InjectedFault>> fault_of(static_cast<std::size_t>(total));
  for (int k = 0; k < n_faults; ++k) {
    const int flat = order[static_cast<std::size_t>(k)];
    InjectedFault f;
    f.id = DiskId{spec.cluster_id, host_name(flat / kDisksPerHost), flat % kDisksPerHost};
    f.style = k < n_sustained ? FaultStyle::Sustained : FaultStyle::Spiky;
    f.onset_day = spec.start_date + static_cast<std::int64_t>(fault_rng.index(static_cast<std::size_t>(spec.n_days)));
    f.severity = f.style == FaultStyle::Sustained ? spec.sustained_severity : spec.spiky_severity;
    f.spike_rate = f.style == FaultStyle::Spiky ? spec.spike_rate : 0.0;
    fault_of[static_cast<std::size_t>(flat)] = f;
  }

  const std::int64_t per_window = (spec.hours.end_s - spec.hours.begin_s + spec.cadence_s - 1) / spec.cadence_s;
  out.traces.reserve(static_cast<std::size_t>(total));
  for (int h = 0; h < spec.n_hosts; ++h) {
    const std::string host = host_name(h);
    Rng host_rng(derive_seed(spec.seed, "host:" + host));
    const double host_median = spec.latency_median_ms * std::exp(spec.host_median_jitter * host_rng.normal());

    for (int d = 0; d < kDisksPerHost; ++d) {
      const int flat = h * kDisksPerHost + d;
      const auto& fault = fault_of[static_cast<std::size_t>(flat)];
      Rng rng(derive_seed(spec.seed, "disk:" + host + "/" + std::to_string(d)));
      DiskTrace trace{DiskId{spec.cluster_id, host, d}, {}};
      trace.samples.reserve(static_cast<std::size_t>(per_window * spec.n_days));

      for (int day = 0; day < spec.n_days; ++day) {
        const Date date = spec.start_date + day;
        const bool active = fault && date >= fault->onset_day;
        const std::int64_t window_start = date.epoch_seconds() + spec.hours.begin_s - spec.hours.utc_offset_s;

        std::vector<char> spike(static_cast<std::size_t>(per_window), 0);
        if (active && fault->style == FaultStyle::Spiky) {
          const int k = std::min<int>(rng.poisson(fault->spike_rate), static_cast<int>(per_window));
          for (int placed = 0; placed < k;) {
            const auto pos = rng.index(static_cast<std::size_t>(per_window));
            if (!spike[pos]) {
              spike[pos] = 1;
              ++placed;
            }
          }
        }

        for (std::int64_t i = 0; i < per_window; ++i) {
          double lat = host_median * std::exp(spec.latency_sigma * rng.normal());
          const double tp = std::max(0.0, rng.normal(spec.throughput_mean, spec.throughput_sd));
          if (active) {
            if (fault->style == FaultStyle::Sustained) {
              lat *= fault->severity;
            } else if (spike[static_cast<std::size_t>(i)]) {
              lat += fault->severity * host_median;
            }
          }
          trace.samples.push_back(
              Sample{window_start + i * spec.cadence_s, quantize(lat, 1e4), quantize(tp, 1e3)});
        }
        out.truth.push_back(FaultLabel{trace.id, date, active ? Verdict::T : Verdict::F,
                                       active ? 1.0 : 0.0});
      }
      out.traces.push_back(std::move(trace));
    }
  }

  for (auto& f : fault_of) {
    if (f) out.faults.push_back(std::move(*f));
  }
  std::sort(out.faults.begin(), out.faults.end(),
            [](const InjectedFault& a, const InjectedFault& b) { return a.id < b.id; });
  return out;
}

std::vector<DiskTrace> parse_trace_csv(std::istream& in) {
  csv::LineReader reader(in);
  csv::expect_header(reader, kTraceHeader);

  struct Row {
    Sample sample;
    std::size_t line;
  };
  std::map<DiskId, std::vector<Row>> by_disk;
  std::string line;
  while (reader.next(line)) {
    const auto ln = reader.line_no();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 6) {
      csv::fail(ln, 0, {}, "expected 6 fields, got " + std::to_string(f.size()));
    }
    const char cluster = parse_cluster(f[0], ln);
    if (f[1].empty()) csv::fail(ln, 2, "host", "empty host identifier");
    const int disk = parse_disk(f[2], ln);
    Sample s;
    s.timestamp = csv::parse_int(f[3], ln, 4, "timestamp_s");
    s.latency = csv::parse_real(f[4], ln, 5, "latency_ms");
    if (s.latency < 0) csv::fail(ln, 5, "latency_ms", "negative latency");
    s.throughput = csv::parse_real(f[5], ln, 6, "throughput_mbps");
    if (s.throughput < 0) csv::fail(ln, 6, "throughput_mbps", "negative throughput");
    by_disk[DiskId{cluster, std::string(f[1]), disk}].push_back(Row{s, ln});
  }

  std::vector<DiskTrace> out;
  out.reserve(by_disk.size());
  for (auto& [id, rows] : by_disk) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.sample.timestamp < b.sample.timestamp;
    });
    DiskTrace trace{id, {}};
    trace.samples.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].sample.timestamp == rows[i - 1].sample.timestamp) {
        csv::fail(rows[i].line, 4, "timestamp_s",
                  "duplicate timestamp for disk " + id.str() + " (also on line " +
                      std::to_string(rows[i - 1].line) + ")");
      }
      trace.samples.push_back(rows[i].sample);
    }
    out.push_back(std::move(trace));
  }
  return out;
}

std::vector<DiskTrace> parse_trace_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_trace_csv(in);
}

void write_trace_csv(std::ostream& out, const std::vector<DiskTrace>& traces) {
  std::vector<const DiskTrace*> sorted;
  sorted.reserve(traces.size());
  for (const auto& t : traces) sorted.push_back(&t);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const DiskTrace* a, const DiskTrace* b) { return a->id < b->id; });

  out << kTraceHeader << '\n';
  std::string row;
  for (const DiskTrace* t : sorted) {
    std::vector<Sample> samples = t->samples;
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
    const std::string prefix = std::string(1, t->id.cluster) + ',' + t->id.host + ',' +
                               std::to_string(t->id.disk) + ',';
    for (const Sample& s : samples) {
      row.clear();
      row += prefix;
      row += std::to_string(s.timestamp);
      row += ',';
      row += format_real(s.latency);
      row += ',';
      row += format_real(s.throughput);
      row += '\n';
      out << row;
    }
  }
}

std::vector<FaultLabel> parse_labels_csv(std::istream& in) {
  csv::LineReader reader(in);
  csv::expect_header(reader, kLabelHeader);
  std::vector<FaultLabel> out;
  std::string line;
  while (reader.next(line)) {
    const auto ln = reader.line_no();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 6) csv::fail(ln, 0, {}, "expected 6 fields, got " + std::to_string(f.size()));
    FaultLabel label;
    label.id.cluster = parse_cluster(f[0], ln);
    if (f[1].empty()) csv::fail(ln, 2, "host", "empty host identifier");
    label.id.host = std::string(f[1]);
    label.id.disk = parse_disk(f[2], ln);
    const auto date = Date::parse(f[3]);
    if (!date) csv::fail(ln, 4, "date", "expected YYYY-MM-DD, got '" + std::string(f[3]) + "'");
    label.date = *date;
    if (f[4] == "T") {
      label.verdict = Verdict::T;
    } else if (f[4] == "F") {
      label.verdict = Verdict::F;
    } else {
      csv::fail(ln, 5, "verdict", "expected T or F, got '" + std::string(f[4]) + "'");
    }
    label.score = csv::parse_real(f[5], ln, 6, "score");
    if (label.score < 0.0 || label.score > 1.0) csv::fail(ln, 6, "score", "score outside [0, 1]");
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<FaultLabel> parse_labels_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_labels_csv(in);
}

void write_labels_csv(std::ostream& out, const std::vector<FaultLabel>& labels) {
  std::vector<const FaultLabel*> sorted;
  sorted.reserve(labels.size());
  for (const auto& l : labels) sorted.push_back(&l);
  std::stable_sort(sorted.begin(), sorted.end(), [](const FaultLabel* a, const FaultLabel* b) {
    if (a->id != b->id) return a->id < b->id;
    return a->date < b->date;
  });
  out << kLabelHeader << '\n';
  for (const FaultLabel* l : sorted) {
    out << l->id.cluster << ',' << l->id.host << ',' << l->id.disk << ',' << l->date.iso() << ','
        << to_char(l->verdict) << ',' << format_real(l->score) << '\n';
  }
}

}  // namespace failslow
