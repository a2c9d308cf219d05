#pragma once

// Trace and label CSV I/O plus the synthetic cluster generator.
//
// Trace CSV:  cluster,host,disk,timestamp_s,latency_ms,throughput_mbps
// Label CSV:  cluster,host,disk,date,verdict,score
//
// Both files carry the header row, use LF line endings and are written in
// (cluster, host, disk, timestamp/date) order. Reals are written in shortest
// round-trip form so parse(write(x)) == x.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "failslow/core.hpp"

namespace failslow {

enum class FaultStyle : std::uint8_t { Sustained, Spiky };

std::string_view to_string(FaultStyle style);

struct FaultMix {
  double sustained = 0.5;
  double spiky = 0.5;
};

struct ClusterSpec {
  char cluster_id = 'A';
  int n_hosts = 10;
  int n_days = 10;
  std::int64_t cadence_s = kDefaultCadenceS;
  std::uint64_t seed = 0;
  double fault_fraction = 0.05;
  FaultMix fault_mix;
  Date start_date = Date::from_ymd(2024, 1, 1);
  CollectionHours hours;

  // Baseline telemetry: per-host lognormal latency, Gaussian throughput.
  double latency_median_ms = 0.5;
  double latency_sigma = 0.25;
  double host_median_jitter = 0.1;  // sd of log host median around latency_median_ms
  double throughput_mean = 100.0;
  double throughput_sd = 10.0;

  double sustained_severity = 3.0;
  double spiky_severity = 10.0;
  double spike_rate = 20.0;

  // Throws Error{Config} describing the first violated invariant.
  void validate() const;
};

struct InjectedFault {
  DiskId id;
  FaultStyle style = FaultStyle::Sustained;
  Date onset_day;
  double severity = 3.0;
  double spike_rate = 0.0;  // Spiky only
};

struct GeneratedCluster {
  std::vector<DiskTrace> traces;
  std::vector<FaultLabel> truth;
  std::vector<InjectedFault> faults;
};

// Pure function of spec: identical specs (including seed) give identical output.
GeneratedCluster generate_cluster(const ClusterSpec& spec);

// Number of faulty disks for a fleet: round-to-nearest, at least one when
// the fraction is positive.
int fault_count(double fault_fraction, int total_disks);

std::vector<DiskTrace> parse_trace_csv(std::istream& in);
std::vector<DiskTrace> parse_trace_csv(const std::filesystem::path& path);
void write_trace_csv(std::ostream& out, const std::vector<DiskTrace>& traces);

std::vector<FaultLabel> parse_labels_csv(std::istream& in);
std::vector<FaultLabel> parse_labels_csv(const std::filesystem::path& path);
void write_labels_csv(std::ostream& out, const std::vector<FaultLabel>& labels);

// Shortest decimal string that parses back to exactly v.
std::string format_real(double v);

}  // namespace failslow
