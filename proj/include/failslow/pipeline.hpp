#pragma once

// Detector families behind one train / predict / serialize interface, plus the
// trace splitting shared by the command-line tool.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/benchmark.hpp"
#include "failslow/classical/forest.hpp"
#include "failslow/classical/iforest.hpp"
#include "failslow/classical/svm.hpp"
#include "failslow/core.hpp"
#include "failslow/llm.hpp"
#include "failslow/neural/models.hpp"
#include "failslow/neural/sequence.hpp"

namespace failslow::pipeline {

enum class ModelKind { Csr, Multipred, Lstm, Patchtst, Autoencoder, Iforest, Svm, Llm };

std::string to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
const std::vector<ModelKind>& all_model_kinds();

struct DetectorSettings {
  double k = 3.0;                      // sigma multiplier for labels and MSE thresholds
  bool per_cluster_threshold = true;  // MSE sigma rule per (cluster, date) instead of per date

  classical::GbdtParams gbdt;
  classical::RandomForestParams forest;
  classical::IForestParams iforest;
  classical::SvmConfig svm;

  neural::SequenceOptions sequence;
  neural::LstmConfig lstm;
  neural::PatchConfig patchtst;
  neural::AeConfig autoencoder;

  llm::LlmConfig llm;
  std::string llm_transport = "mock";  // mock | http
};

// Training and test windows per disk, cut at the split day (train: <= split).
struct Split {
  neural::WindowsByDisk train;
  neural::WindowsByDisk test;
  Date split_day;
};
Split split_traces(const std::vector<DiskTrace>& traces, Date split_day, const CollectionHours& hours = {});

// Flattened windows in (disk, date) order.
std::vector<DailyWindow> flatten(const neural::WindowsByDisk& windows);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual ModelKind kind() const = 0;
  // Scores in [0, 1] for every test (disk, date) the detector covers.
  virtual bench::PredictionSet predict(const Split& data) const = 0;
  virtual nlohmann::json model_json() const = 0;
  // epoch,train_loss,val_loss for the neural detectors; empty otherwise.
  virtual std::string training_log_csv() const { return {}; }

  const DetectorSettings& settings() const { return settings_; }

 protected:
  explicit Detector(DetectorSettings settings) : settings_(std::move(settings)) {}
  DetectorSettings settings_;
};

// Supervised detectors learn from 3-sigma labels of the training windows.
std::unique_ptr<Detector> train_detector(ModelKind kind, const Split& data, const DetectorSettings& settings,
                                         std::uint64_t seed);

// {"format": "failslow-detector", "version": 1, "kind": ..., "settings": ..., "model": ...}
nlohmann::json to_json(const Detector& detector);
std::unique_ptr<Detector> detector_from_json(const nlohmann::json& j);

// Groups (disk, date) MSEs by date, and by cluster when per_cluster is set,
// and applies the sigma rule within each group.
std::vector<FaultLabel> classify_mse_groups(const std::map<std::pair<DiskId, Date>, double>& mses, double k,
                                            bool per_cluster);

}  // namespace failslow::pipeline
