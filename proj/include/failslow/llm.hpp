#pragma once

// LLM detection protocol: sample each disk's day, render host patches into a
// prompt with a fixed output contract, send it through a transport and parse
// the `<DiskId>: T|F` lines that come back.

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "failslow/core.hpp"

namespace failslow::llm {

struct LlmConfig {
  std::size_t hosts_per_patch = 50;
  std::size_t samples_per_disk = 20;
  std::size_t context_budget_tokens = 128000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Uniform sample without replacement, kept in time order. Windows with at
// most n samples are returned whole.
std::vector<Sample> sample_points(const DailyWindow& window, std::size_t n, std::uint64_t seed);

struct DiskSample {
  DiskId disk;
  std::vector<Sample> points;
};
using Patch = std::vector<DiskSample>;

struct Prompt {
  std::string text;
  std::size_t token_estimate = 0;
  std::size_t data_lines = 0;
};

// ceil(characters / 4)
std::size_t estimate_tokens(std::string_view text);

// Throws Error{EmptyInput} for an empty patch and Error{OverBudget} when the
// rendered prompt's estimate exceeds the budget.
Prompt build_prompt(const Patch& patch, std::size_t budget_tokens);

// "A/h000/3: lat=[0.5,0.51], tp=[100.2,99.8]"
std::string render_data_line(const DiskSample& sample);

struct ParsedVerdicts {
  std::vector<FaultLabel> labels;  // one per expected disk, sorted
  std::vector<std::string> warnings;
};

// Tolerates surrounding whitespace, list bullets and letter case. Expected
// disks missing from the response become F with a warning; unknown disks are
// ignored with a warning. Throws Error{Protocol} when no line parses.
ParsedVerdicts parse_verdicts(std::string_view response, const std::vector<DiskId>& expected, Date date);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Answers with the planted verdicts of the disks that appear in the prompt.
class MockTransport final : public Transport {
 public:
  explicit MockTransport(std::map<DiskId, Verdict> plan);
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::map<DiskId, Verdict> plan_;
  std::atomic<std::size_t> calls_{0};
};

// Chat-completion client. Endpoint, key and model come from
// FAILSLOW_LLM_ENDPOINT, FAILSLOW_LLM_API_KEY and FAILSLOW_LLM_MODEL.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key, std::string model);
  static std::unique_ptr<HttpTransport> from_env();
  std::string complete(const std::string& prompt) override;

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  std::string model_;
};

// Hosts of each cluster are grouped into patches of hosts_per_patch (sorted
// order); one request per patch. All windows must share one date. Returns one
// label per input window.
struct Detection {
  std::vector<FaultLabel> labels;
  std::vector<std::string> warnings;
  std::size_t requests = 0;
};
Detection detect_day(const std::vector<DailyWindow>& windows, const LlmConfig& config, Transport& transport);

}  // namespace failslow::llm
