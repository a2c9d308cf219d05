#include "failslow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "failslow/labeling.hpp"

namespace failslow::pipeline {
namespace {

using classical::FeatureRows;

struct FeatureTable {
  std::vector<std::pair<DiskId, Date>> keys;
  FeatureRows rows;
};

FeatureTable snapshot_rows(const neural::WindowsByDisk& windows) {
  FeatureTable t;
  for (const auto& [id, days] : windows) {
    for (const auto& w : days) {
      if (w.samples.empty()) continue;
      t.keys.emplace_back(id, w.date);
      t.rows.push_back(extract_snapshot_features(w).to_vector());
    }
  }
  return t;
}

std::vector<std::string> feature_names() {
  const auto names = SnapshotFeatures::names();
  return {names.begin(), names.end()};
}

// 1 for rows labeled T by the fleet sigma rule.
std::vector<double> sigma_targets(const FeatureTable& table, const Split& data, double k) {
  std::map<std::pair<DiskId, Date>, Verdict> verdicts;
  for (const auto& l : label_fleet(flatten(data.train), k)) verdicts[{l.id, l.date}] = l.verdict;
  std::vector<double> y;
  y.reserve(table.keys.size());
  for (const auto& key : table.keys) {
    const auto it = verdicts.find(key);
    y.push_back(it != verdicts.end() && it->second == Verdict::T ? 1.0 : 0.0);
  }
  return y;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

nlohmann::json sequence_json(const neural::SequenceOptions& s) {
  return {{"window", s.window},
          {"features", s.features == neural::FeatureSet::Latency ? "latency" : "latency_throughput"},
          {"train_stride", s.train_stride},
          {"test_stride", s.test_stride}};
}

neural::SequenceOptions sequence_from_json(const nlohmann::json& j) {
  neural::SequenceOptions s;
  s.window = j.at("window").get<std::size_t>();
  s.features = j.at("features").get<std::string>() == "latency" ? neural::FeatureSet::Latency
                                                                  : neural::FeatureSet::LatencyThroughput;
  s.train_stride = j.at("train_stride").get<std::size_t>();
  s.test_stride = j.at("test_stride").get<std::size_t>();
  return s;
}

nlohmann::json settings_json(const DetectorSettings& s) {
  return {{"k", s.k},
          {"per_cluster_threshold", s.per_cluster_threshold},
          {"sequence", sequence_json(s.sequence)},
          {"llm",
           {{"hosts_per_patch", s.llm.hosts_per_patch},
            {"samples_per_disk", s.llm.samples_per_disk},
            {"context_budget_tokens", s.llm.context_budget_tokens},
            {"seed", s.llm.seed}}},
          {"llm_transport", s.llm_transport}};
}

DetectorSettings settings_from_json(const nlohmann::json& j) {
  DetectorSettings s;
  s.k = j.at("k").get<double>();
  s.per_cluster_threshold = j.at("per_cluster_threshold").get<bool>();
  s.sequence = sequence_from_json(j.at("sequence"));
  const auto& l = j.at("llm");
  s.llm.hosts_per_patch = l.at("hosts_per_patch").get<std::size_t>();
  s.llm.samples_per_disk = l.at("samples_per_disk").get<std::size_t>();
  s.llm.context_budget_tokens = l.at("context_budget_tokens").get<std::size_t>();
  s.llm.seed = l.at("seed").get<std::uint64_t>();
  s.llm_transport = j.at("llm_transport").get<std::string>();
  return s;
}

// ---------------------------------------------------------------------------

class ForestDetector final : public Detector {
 public:
  ForestDetector(ModelKind kind, DetectorSettings s, classical::ForestModel model)
      : Detector(std::move(s)), kind_(kind), model_(std::move(model)) {}
  ModelKind kind() const override { return kind_; }
  bench::PredictionSet predict(const Split& data) const override {
    bench::PredictionSet out{to_string(kind_), {}};
    const auto table = snapshot_rows(data.test);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      out.add(table.keys[i].first, table.keys[i].second, classical::predict_forest(model_, table.rows[i]));
    }
    return out;
  }
  nlohmann::json model_json() const override { return classical::to_json(model_); }

 private:
  ModelKind kind_;
  classical::ForestModel model_;
};

class SvmDetector final : public Detector {
 public:
  SvmDetector(DetectorSettings s, classical::SvmModel model) : Detector(std::move(s)), model_(std::move(model)) {}
  ModelKind kind() const override { return ModelKind::Svm; }
  bench::PredictionSet predict(const Split& data) const override {
    bench::PredictionSet out{"svm", {}};
    const auto table = snapshot_rows(data.test);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      out.add(table.keys[i].first, table.keys[i].second, logistic(classical::svm_decision(model_, table.rows[i])));
    }
    return out;
  }
  nlohmann::json model_json() const override { return classical::to_json(model_); }

 private:
  classical::SvmModel model_;
};

class IForestDetector final : public Detector {
 public:
  IForestDetector(DetectorSettings s, classical::IForestModel model) : Detector(std::move(s)), model_(std::move(model)) {}
  ModelKind kind() const override { return ModelKind::Iforest; }
  bench::PredictionSet predict(const Split& data) const override {
    bench::PredictionSet out{"iforest", {}};
    const auto table = snapshot_rows(data.test);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      out.add(table.keys[i].first, table.keys[i].second, classical::iforest_score(model_, table.rows[i]));
    }
    return out;
  }
  nlohmann::json model_json() const override { return classical::to_json(model_); }

 private:
  classical::IForestModel model_;
};

class AutoencoderDetector final : public Detector {
 public:
  AutoencoderDetector(DetectorSettings s, std::unique_ptr<neural::Autoencoder> model)
      : Detector(std::move(s)), model_(std::move(model)) {}
  ModelKind kind() const override { return ModelKind::Autoencoder; }
  bench::PredictionSet predict(const Split& data) const override {
    const auto table = snapshot_rows(data.test);
    std::map<std::pair<DiskId, Date>, double> mses;
    for (std::size_t i = 0; i < table.rows.size(); ++i) mses[table.keys[i]] = neural::reconstruction_mse(*model_, table.rows[i]);
    bench::PredictionSet out{"autoencoder", {}};
    out.add(classify_mse_groups(mses, settings_.k, settings_.per_cluster_threshold));
    return out;
  }
  nlohmann::json model_json() const override { return neural::to_json(*model_); }
  std::string training_log_csv() const override {
    std::ostringstream s;
    model_->log.write_csv(s);
    return s.str();
  }

 private:
  std::unique_ptr<neural::Autoencoder> model_;
};

class ForecastDetector final : public Detector {
 public:
  ForecastDetector(ModelKind kind, DetectorSettings s, std::unique_ptr<neural::SequenceForecaster> model)
      : Detector(std::move(s)), kind_(kind), model_(std::move(model)) {}
  ModelKind kind() const override { return kind_; }
  bench::PredictionSet predict(const Split& data) const override {
    const auto dataset = neural::build_sequences(data.train, data.test, settings_.sequence, &model_->scaler);
    const auto by_day = neural::forecast_mse_by_day(*model_, dataset);
    std::map<std::pair<DiskId, Date>, double> mses(by_day.begin(), by_day.end());
    bench::PredictionSet out{to_string(kind_), {}};
    if (!mses.empty()) out.add(classify_mse_groups(mses, settings_.k, settings_.per_cluster_threshold));
    return out;
  }
  nlohmann::json model_json() const override {
    if (kind_ == ModelKind::Lstm) return neural::to_json(static_cast<const neural::LstmForecaster&>(*model_));
    return neural::to_json(static_cast<const neural::PatchTstForecaster&>(*model_));
  }
  std::string training_log_csv() const override {
    std::ostringstream s;
    model_->log.write_csv(s);
    return s.str();
  }

 private:
  ModelKind kind_;
  std::unique_ptr<neural::SequenceForecaster> model_;
};

class LlmDetector final : public Detector {
 public:
  explicit LlmDetector(DetectorSettings s) : Detector(std::move(s)) {}
  ModelKind kind() const override { return ModelKind::Llm; }
  bench::PredictionSet predict(const Split& data) const override {
    std::map<Date, std::vector<DailyWindow>> by_date;
    for (const auto& w : flatten(data.test)) by_date[w.date].push_back(w);
    bench::PredictionSet out{"llm", {}};
    for (const auto& [date, windows] : by_date) {
      std::unique_ptr<llm::Transport> transport;
      if (settings_.llm_transport == "http") {
        transport = llm::HttpTransport::from_env();
      } else {
        // The mock answers with the sigma-rule verdicts for the day.
        std::map<DiskId, Verdict> plan;
        for (const auto& l : label_fleet(windows, settings_.k)) plan[l.id] = l.verdict;
        transport = std::make_unique<llm::MockTransport>(std::move(plan));
      }
      out.add(llm::detect_day(windows, settings_.llm, *transport).labels);
    }
    return out;
  }
  nlohmann::json model_json() const override { return nlohmann::json::object(); }
};

std::unique_ptr<Detector> train_forecaster(ModelKind kind, const Split& data, const DetectorSettings& settings,
                                           std::uint64_t seed) {
  const auto dataset = neural::build_sequences(data.train, data.test, settings.sequence);
  if (kind == ModelKind::Lstm) {
    auto config = settings.lstm;
    config.train.seed = seed;
    return std::make_unique<ForecastDetector>(kind, settings, neural::train_lstm(dataset, config));
  }
  auto config = settings.patchtst;
  config.train.seed = seed;
  return std::make_unique<ForecastDetector>(kind, settings, neural::train_patchtst(dataset, config));
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Csr: return "csr";
    case ModelKind::Multipred: return "multipred";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Patchtst: return "patchtst";
    case ModelKind::Autoencoder: return "autoencoder";
    case ModelKind::Iforest: return "iforest";
    case ModelKind::Svm: return "svm";
    case ModelKind::Llm: return "llm";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto k : all_model_kinds()) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {ModelKind::Csr,         ModelKind::Multipred, ModelKind::Lstm,
                                               ModelKind::Patchtst,    ModelKind::Autoencoder,
                                               ModelKind::Iforest,     ModelKind::Svm,       ModelKind::Llm};
  return kinds;
}

Split split_traces(const std::vector<DiskTrace>& traces, Date split_day, const CollectionHours& hours) {
  if (traces.empty()) throw Error(ErrorKind::EmptyInput, "no traces");
  Split s;
  s.split_day = split_day;
  for (const auto& t : traces) {
    auto parts = train_test_split(t, split_day, hours);
    if (!parts.train.empty()) s.train[t.id] = std::move(parts.train);
    if (!parts.test.empty()) s.test[t.id] = std::move(parts.test);
  }
  if (s.train.empty()) throw Error(ErrorKind::InvalidSplit, "no training days on or before " + split_day.iso());
  if (s.test.empty()) throw Error(ErrorKind::InvalidSplit, "no test days after " + split_day.iso());
  return s;
}

std::vector<DailyWindow> flatten(const neural::WindowsByDisk& windows) {
  std::vector<DailyWindow> out;
  for (const auto& [id, days] : windows) out.insert(out.end(), days.begin(), days.end());
  return out;
}

std::vector<FaultLabel> classify_mse_groups(const std::map<std::pair<DiskId, Date>, double>& mses, double k,
                                            bool per_cluster) {
  std::map<std::pair<Date, char>, std::vector<std::pair<DiskId, double>>> groups;
  for (const auto& [key, mse] : mses) groups[{key.second, per_cluster ? key.first.cluster : '*'}].emplace_back(key.first, mse);
  std::vector<FaultLabel> out;
  for (const auto& [group, values] : groups) {
    auto labels = neural::classify_by_mse(values, group.first, k);
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

std::unique_ptr<Detector> train_detector(ModelKind kind, const Split& data, const DetectorSettings& settings,
                                         std::uint64_t seed) {
  switch (kind) {
    case ModelKind::Csr: {
      const auto table = snapshot_rows(data.train);
      if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "no training windows");
      const auto csr = csr_labels(data.train, label_fleet(flatten(data.train), settings.k));
      std::vector<double> y;
      for (const auto& key : table.keys) {
        const auto it = csr.find(key.first);
        y.push_back(it != csr.end() ? classical::csr_binary_target(it->second) : 0.0);
      }
      auto params = settings.gbdt;
      params.seed = seed;
      return std::make_unique<ForestDetector>(kind, settings,
                                              classical::train_gbdt_ranker(table.rows, y, params, feature_names()));
    }
    case ModelKind::Multipred: {
      const auto table = snapshot_rows(data.train);
      if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "no training windows");
      auto params = settings.forest;
      params.seed = seed;
      return std::make_unique<ForestDetector>(
          kind, settings,
          classical::train_random_forest(table.rows, sigma_targets(table, data, settings.k), params, feature_names()));
    }
    case ModelKind::Svm: {
      const auto table = snapshot_rows(data.train);
      if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "no training windows");
      auto y = sigma_targets(table, data, settings.k);
      for (auto& v : y) v = v > 0.0 ? 1.0 : -1.0;
      auto config = settings.svm;
      config.seed = seed;
      return std::make_unique<SvmDetector>(settings, classical::train_svm(table.rows, y, config, feature_names()));
    }
    case ModelKind::Iforest: {
      const auto table = snapshot_rows(data.train);
      if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "no training windows");
      auto params = settings.iforest;
      params.seed = seed;
      return std::make_unique<IForestDetector>(settings, classical::train_isolation_forest(table.rows, params));
    }
    case ModelKind::Autoencoder: {
      const auto table = snapshot_rows(data.train);
      return std::make_unique<AutoencoderDetector>(settings,
                                                   neural::train_autoencoder(table.rows, settings.autoencoder, seed));
    }
    case ModelKind::Lstm:
    case ModelKind::Patchtst:
      return train_forecaster(kind, data, settings, seed);
    case ModelKind::Llm: {
      auto s = settings;
      s.llm.seed = seed;
      s.llm.validate();
      return std::make_unique<LlmDetector>(s);
    }
  }
  throw Error(ErrorKind::Config, "unknown model kind");
}

nlohmann::json to_json(const Detector& detector) {
  return {{"format", "failslow-detector"},
          {"version", 1},
          {"kind", to_string(detector.kind())},
          {"settings", settings_json(detector.settings())},
          {"model", detector.model_json()}};
}

std::unique_ptr<Detector> detector_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "failslow-detector" || j.value("version", 0) != 1) {
      throw Error(ErrorKind::Parse, "not a version-1 failslow-detector file");
    }
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::Parse, "unknown detector kind '" + j.at("kind").get<std::string>() + "'");
    const auto settings = settings_from_json(j.at("settings"));
    const auto& m = j.at("model");
    switch (*kind) {
      case ModelKind::Csr:
      case ModelKind::Multipred:
        return std::make_unique<ForestDetector>(*kind, settings, classical::forest_from_json(m));
      case ModelKind::Svm:
        return std::make_unique<SvmDetector>(settings, classical::svm_from_json(m));
      case ModelKind::Iforest:
        return std::make_unique<IForestDetector>(settings, classical::iforest_from_json(m));
      case ModelKind::Autoencoder:
        return std::make_unique<AutoencoderDetector>(settings, neural::autoencoder_from_json(m));
      case ModelKind::Lstm:
        return std::make_unique<ForecastDetector>(*kind, settings, neural::lstm_from_json(m));
      case ModelKind::Patchtst:
        return std::make_unique<ForecastDetector>(*kind, settings, neural::patchtst_from_json(m));
      case ModelKind::Llm:
        return std::make_unique<LlmDetector>(settings);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed detector file: ") + e.what());
  }
  throw Error(ErrorKind::Parse, "unknown detector kind");
}

}  // namespace failslow::pipeline
