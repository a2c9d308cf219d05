#include <algorithm>
#include <cctype>
#include <numeric>
#include <set>
#include <sstream>

#include "failslow/ingest.hpp"
#include "failslow/llm.hpp"
#include "failslow/rng.hpp"

namespace failslow::llm {
namespace {

constexpr std::string_view kInstructions =
    "You are monitoring storage disks for fail-slow behaviour: a disk whose latency is consistently higher than "
    "its peers on the same host, or that shows recurrent latency spikes, without failing outright.\n"
    "Each data line below lists a random sample of one disk's latency (ms) and throughput (MB/s) readings "
    "collected between 9 PM and midnight.\n"
    "Compare every disk with the other disks of its host and decide whether it is fail-slow.\n\n"
    "Data:\n";

constexpr std::string_view kContract =
    "\nAnswer with exactly one line per disk listed above and nothing else, in the form\n"
    "<cluster>/<host>/<disk>: T\n"
    "for a fail-slow disk, or\n"
    "<cluster>/<host>/<disk>: F\n"
    "otherwise.\n";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void LlmConfig::validate() const {
  if (hosts_per_patch < 1) throw Error(ErrorKind::Config, "hosts_per_patch must be >= 1");
  if (samples_per_disk < 1) throw Error(ErrorKind::Config, "samples_per_disk must be >= 1");
  if (context_budget_tokens < 1) throw Error(ErrorKind::Config, "context_budget_tokens must be >= 1");
}

std::vector<Sample> sample_points(const DailyWindow& window, std::size_t n, std::uint64_t seed) {
  if (window.samples.empty()) throw Error(ErrorKind::EmptyInput, "cannot sample an empty window");
  if (window.samples.size() <= n) return window.samples;
  std::vector<std::size_t> idx(window.samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots form the sample.
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Sample> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(window.samples[i]);
  return out;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string render_data_line(const DiskSample& sample) {
  std::string line = sample.disk.str() + ": lat=[";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    if (i) line += ',';
    line += format_real(sample.points[i].latency);
  }
  line += "], tp=[";
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    if (i) line += ',';
    line += format_real(sample.points[i].throughput);
  }
  line += ']';
  return line;
}

Prompt build_prompt(const Patch& patch, std::size_t budget_tokens) {
  if (patch.empty()) throw Error(ErrorKind::EmptyInput, "empty patch");
  Prompt p;
  p.text = kInstructions;
  for (const auto& s : patch) {
    p.text += render_data_line(s);
    p.text += '\n';
    ++p.data_lines;
  }
  p.text += kContract;
  p.token_estimate = estimate_tokens(p.text);
  if (p.token_estimate > budget_tokens) {
    throw Error(ErrorKind::OverBudget, "prompt estimate " + std::to_string(p.token_estimate) +
                                           " tokens exceeds budget " + std::to_string(budget_tokens));
  }
  return p;
}

ParsedVerdicts parse_verdicts(std::string_view response, const std::vector<DiskId>& expected, Date date) {
  std::map<std::string, DiskId> by_name;
  for (const auto& id : expected) by_name.emplace(lower(id.str()), id);
  std::map<DiskId, Verdict> found;
  ParsedVerdicts out;
  std::size_t parsed = 0;

  std::size_t pos = 0;
  while (pos <= response.size()) {
    const std::size_t end = std::min(response.find('\n', pos), response.size());
    std::string_view line = trim(response.substr(pos, end - pos));
    pos = end + 1;
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim(line.substr(1));
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string name = lower(trim(line.substr(0, colon)));
    const std::string value = lower(trim(line.substr(colon + 1)));
    if (value != "t" && value != "f") continue;
    const auto id = DiskId::parse(name);
    if (!id) {
      // Cluster letters are upper case in DiskId; retry after restoring it.
      std::string fixed = name;
      if (!fixed.empty()) fixed[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(fixed[0])));
      if (!DiskId::parse(fixed)) continue;
    }
    ++parsed;
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      out.warnings.push_back("ignoring verdict for unexpected disk " + std::string(trim(line.substr(0, colon))));
      continue;
    }
    const Verdict v = value == "t" ? Verdict::T : Verdict::F;
    if (!found.emplace(it->second, v).second) {
      out.warnings.push_back("duplicate verdict for " + it->second.str() + " ignored");
    }
  }
  if (parsed == 0) throw Error(ErrorKind::Protocol, "response contains no `<DiskId>: T|F` line");

  std::set<DiskId> sorted(expected.begin(), expected.end());
  for (const auto& id : sorted) {
    const auto it = found.find(id);
    if (it == found.end()) {
      out.warnings.push_back("no verdict for " + id.str() + ", assuming F");
      out.labels.push_back(FaultLabel{id, date, Verdict::F, 0.0});
    } else {
      out.labels.push_back(FaultLabel{id, date, it->second, it->second == Verdict::T ? 1.0 : 0.0});
    }
  }
  return out;
}

MockTransport::MockTransport(std::map<DiskId, Verdict> plan) : plan_(std::move(plan)) {}

std::string MockTransport::complete(const std::string& prompt) {
  calls_.fetch_add(1);
  std::set<DiskId> mentioned;
  std::istringstream in(prompt);
  std::string line;
  while (std::getline(in, line)) {
    const auto marker = line.find(": lat=[");
    if (marker == std::string::npos) continue;
    if (auto id = DiskId::parse(line.substr(0, marker))) mentioned.insert(*id);
  }
  std::string out;
  for (const auto& id : mentioned) {
    const auto it = plan_.find(id);
    if (it == plan_.end()) continue;
    out += id.str() + ": " + to_char(it->second) + "\n";
  }
  return out;
}

Detection detect_day(const std::vector<DailyWindow>& windows, const LlmConfig& config, Transport& transport) {
  config.validate();
  if (windows.empty()) throw Error(ErrorKind::EmptyInput, "no windows to classify");
  const Date date = windows.front().date;
  std::map<char, std::map<std::string, std::vector<const DailyWindow*>>> hosts;
  for (const auto& w : windows) {
    if (w.date != date) throw Error(ErrorKind::Contract, "detect_day needs windows from a single date");
    hosts[w.id.cluster][w.id.host].push_back(&w);
  }

  Detection out;
  for (const auto& [cluster, by_host] : hosts) {
    std::vector<const std::vector<const DailyWindow*>*> ordered;
    for (const auto& [host, ws] : by_host) ordered.push_back(&ws);
    for (std::size_t start = 0; start < ordered.size(); start += config.hosts_per_patch) {
      Patch patch;
      std::vector<DiskId> expected;
      std::vector<FaultLabel> empty_days;
      for (std::size_t h = start; h < std::min(ordered.size(), start + config.hosts_per_patch); ++h) {
        for (const auto* w : *ordered[h]) {
          if (w->samples.empty()) {
            empty_days.push_back(FaultLabel{w->id, date, Verdict::F, 0.0});
            continue;
          }
          const auto seed = derive_seed(config.seed, w->id.str() + "@" + date.iso());
          patch.push_back(DiskSample{w->id, sample_points(*w, config.samples_per_disk, seed)});
          expected.push_back(w->id);
        }
      }
      out.labels.insert(out.labels.end(), empty_days.begin(), empty_days.end());
      if (patch.empty()) continue;
      std::sort(patch.begin(), patch.end(), [](const DiskSample& a, const DiskSample& b) { return a.disk < b.disk; });
      const Prompt prompt = build_prompt(patch, config.context_budget_tokens);
      const std::string response = transport.complete(prompt.text);
      ++out.requests;
      auto parsed = parse_verdicts(response, expected, date);
      out.labels.insert(out.labels.end(), parsed.labels.begin(), parsed.labels.end());
      out.warnings.insert(out.warnings.end(), parsed.warnings.begin(), parsed.warnings.end());
    }
  }
  std::sort(out.labels.begin(), out.labels.end(),
            [](const FaultLabel& a, const FaultLabel& b) { return a.id < b.id; });
  return out;
}

}  // namespace failslow::llm
