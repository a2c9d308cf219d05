#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "failslow/ingest.hpp"

using namespace failslow;

namespace {

ClusterSpec small_spec(std::uint64_t seed) {
  ClusterSpec s;
  s.n_hosts = 3;
  s.n_days = 4;
  s.seed = seed;
  s.fault_fraction = 0.1;
  return s;
}

std::string error_message(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_trace_csv(in);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    return e.what();
  }
  ADD_FAILURE() << "no parse error for:\n" << csv;
  return {};
}

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(FaultCount, RoundsAndKeepsAtLeastOne) {
  EXPECT_EQ(fault_count(0.05, 120), 6);
  EXPECT_EQ(fault_count(0.05, 24), 1);   // 1.2
  EXPECT_EQ(fault_count(0.05, 4), 1);    // 0.2 still injects one
  EXPECT_EQ(fault_count(0.0, 120), 0);
  EXPECT_EQ(fault_count(1.0, 12), 12);
}

TEST(GenerateCluster, ShapeMatchesSpec) {
  const auto spec = small_spec(1);
  const auto c = generate_cluster(spec);
  ASSERT_EQ(c.traces.size(), 36u);
  for (const auto& t : c.traces) {
    EXPECT_EQ(t.samples.size(), 720u * 4);
    const auto windows = window_split(t);
    ASSERT_EQ(windows.size(), 4u);
    for (const auto& w : windows) EXPECT_EQ(w.samples.size(), 720u);
  }
  EXPECT_EQ(c.truth.size(), 36u * 4);
  EXPECT_EQ(c.faults.size(), static_cast<std::size_t>(fault_count(0.1, 36)));
  EXPECT_EQ(c.traces.front().id.str(), "A/h000/0");
}

TEST(GenerateCluster, SameSeedSameBytes) {
  std::ostringstream a, b, c;
  write_trace_csv(a, generate_cluster(small_spec(5)).traces);
  write_trace_csv(b, generate_cluster(small_spec(5)).traces);
  write_trace_csv(c, generate_cluster(small_spec(6)).traces);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(GenerateCluster, TruthFollowsOnset) {
  const auto c = generate_cluster(small_spec(2));
  for (const auto& f : c.faults) {
    for (const auto& l : c.truth) {
      if (l.id != f.id) continue;
      EXPECT_EQ(l.verdict == Verdict::T, l.date >= f.onset_day);
    }
  }
  const auto positives = std::count_if(c.truth.begin(), c.truth.end(), [](const FaultLabel& l) { return l.verdict == Verdict::T; });
  EXPECT_GT(positives, 0);
}

TEST(GenerateCluster, SustainedFaultMultipliesLatency) {
  ClusterSpec spec = small_spec(3);
  spec.fault_mix = {1.0, 0.0};
  const auto c = generate_cluster(spec);
  ASSERT_FALSE(c.faults.empty());
  for (const auto& f : c.faults) {
    ASSERT_EQ(f.style, FaultStyle::Sustained);
    double faulty = 0, healthy = 0;
    std::size_t nf = 0, nh = 0;
    for (const auto& t : c.traces) {
      const bool other_fault = t.id != f.id && std::any_of(c.faults.begin(), c.faults.end(),
                                                           [&](const InjectedFault& g) { return g.id == t.id; });
      if (t.id.host != f.id.host || other_fault) continue;
      for (const auto& w : window_split(t)) {
        if (w.date < f.onset_day) continue;
        for (const auto& s : w.samples) {
          if (t.id == f.id) {
            faulty += s.latency;
            ++nf;
          } else {
            healthy += s.latency;
            ++nh;
          }
        }
      }
    }
    EXPECT_NEAR((faulty / nf) / (healthy / nh), spec.sustained_severity, 0.15 * spec.sustained_severity);
  }
}

TEST(GenerateCluster, SpikyFaultAddsAboutRateSpikesPerDay) {
  ClusterSpec spec = small_spec(4);
  spec.fault_mix = {0.0, 1.0};
  spec.n_days = 6;
  const auto c = generate_cluster(spec);
  for (const auto& f : c.faults) {
    ASSERT_EQ(f.style, FaultStyle::Spiky);
    std::vector<double> peer;
    for (const auto& t : c.traces) {
      if (t.id.host == f.id.host && t.id != f.id) {
        for (const auto& s : t.samples) peer.push_back(s.latency);
      }
    }
    const double host_median = median(peer);
    std::size_t spikes = 0, days = 0;
    for (const auto& t : c.traces) {
      if (t.id != f.id) continue;
      for (const auto& w : window_split(t)) {
        if (w.date < f.onset_day) continue;
        ++days;
        for (const auto& s : w.samples) spikes += s.latency > 5.0 * host_median;
      }
    }
    ASSERT_GT(days, 0u);
    const double per_day = static_cast<double>(spikes) / static_cast<double>(days);
    // Poisson(20) per day; 4 sd of the daily mean over >= 1 day.
    EXPECT_NEAR(per_day, spec.spike_rate, 4.0 * std::sqrt(spec.spike_rate / static_cast<double>(days)));
  }
}

TEST(GenerateCluster, ValuesAreQuantized) {
  const auto c = generate_cluster(small_spec(7));
  for (const auto& s : c.traces.front().samples) {
    EXPECT_NEAR(s.latency * 1e4, std::round(s.latency * 1e4), 1e-6);
    EXPECT_NEAR(s.throughput * 1e3, std::round(s.throughput * 1e3), 1e-6);
    EXPECT_GE(s.throughput, 0.0);
  }
}

TEST(GenerateCluster, RejectsBadSpecs) {
  ClusterSpec s;
  s.n_hosts = 0;
  EXPECT_THROW(generate_cluster(s), Error);
  s = ClusterSpec{};
  s.fault_mix = {0.7, 0.7};
  EXPECT_THROW(generate_cluster(s), Error);
  s = ClusterSpec{};
  s.fault_fraction = 1.5;
  EXPECT_THROW(generate_cluster(s), Error);
}

TEST(TraceCsv, RoundTrip) {
  const auto c = generate_cluster(small_spec(8));
  std::stringstream io;
  write_trace_csv(io, c.traces);
  const auto back = parse_trace_csv(io);
  ASSERT_EQ(back.size(), c.traces.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, c.traces[i].id);
    EXPECT_EQ(back[i].samples, c.traces[i].samples);
  }
}

TEST(TraceCsv, ErrorsNameLineAndColumn) {
  const std::string header = "cluster,host,disk,timestamp_s,latency_ms,throughput_mbps\n";
  EXPECT_NE(error_message("cluster,host\n").find("line 1"), std::string::npos);
  const auto neg = error_message(header + "A,h0,1,100,0.5,10\nA,h0,1,115,-0.5,10\n");
  EXPECT_NE(neg.find("line 3"), std::string::npos);
  EXPECT_NE(neg.find("latency_ms"), std::string::npos);
  const auto disk = error_message(header + "A,h0,12,100,0.5,10\n");
  EXPECT_NE(disk.find("line 2"), std::string::npos);
  EXPECT_NE(disk.find("disk"), std::string::npos);
  const auto dup = error_message(header + "A,h0,1,100,0.5,10\nA,h0,1,100,0.6,10\n");
  EXPECT_NE(dup.find("line 3"), std::string::npos);
  const auto text = error_message(header + "A,h0,1,100,abc,10\n");
  EXPECT_NE(text.find("column 5"), std::string::npos);
}

TEST(LabelCsv, RoundTrip) {
  const auto c = generate_cluster(small_spec(9));
  std::stringstream io;
  write_labels_csv(io, c.truth);
  EXPECT_EQ(parse_labels_csv(io), c.truth);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(100.0), "100");
  EXPECT_EQ(std::stod(format_real(0.1 + 0.2)), 0.1 + 0.2);
}
