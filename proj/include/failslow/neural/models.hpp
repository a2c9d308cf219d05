#pragma once

// Neural detectors: an LSTM and a patch-transformer next-step forecaster,
// and a dense autoencoder. All three produce per-disk mean squared errors
// that are turned into labels with a fleet-wide 3-sigma rule.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/autodiff.hpp"
#include "failslow/core.hpp"
#include "failslow/neural/layers.hpp"
#include "failslow/neural/sequence.hpp"

namespace failslow::neural {

struct TrainOptions {
  int max_epochs = 30;
  std::size_t batch_size = 64;          // 0: full batch
  std::size_t max_train_windows = 2048;  // 0: all; otherwise a fixed seeded subset
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation split
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;

  // CSV: epoch,train_loss,val_loss
  void write_csv(std::ostream& out) const;
};

class SequenceForecaster {
 public:
  virtual ~SequenceForecaster() = default;
  // inputs: (batch, window * features) time-major rows -> (batch, features).
  virtual Tensor forward(const Tensor& inputs) const = 0;
  virtual ad::ParameterSet& params() = 0;
  virtual std::size_t window() const = 0;
  virtual std::size_t features() const = 0;

  MinMaxScaler scaler;
  TrainLog log;
};

// ---------------------------------------------------------------------------

struct LstmConfig {
  int n_layers = 2;
  std::size_t hidden = 100;
  std::size_t input_features = 1;
  std::size_t window = 32;
  ad::OptimizerConfig optimizer = [] {
    ad::OptimizerConfig c;
    c.kind = ad::OptimizerKind::RMSprop;
    return c;
  }();
  TrainOptions train;

  void validate() const;
};

class LstmForecaster final : public SequenceForecaster {
 public:
  LstmForecaster(const LstmConfig& config, std::uint64_t seed);

  Tensor forward(const Tensor& inputs) const override;
  ad::ParameterSet& params() override { return params_; }
  std::size_t window() const override { return config_.window; }
  std::size_t features() const override { return config_.input_features; }
  const LstmConfig& config() const { return config_; }

  // One cell step of the given layer, exposed for gradient checks.
  const LstmCell& cell(std::size_t layer) const { return cells_.at(layer); }

 private:
  LstmConfig config_;
  ad::ParameterSet params_;
  std::vector<LstmCell> cells_;
  Linear head_;
};

// ---------------------------------------------------------------------------

struct PatchConfig {
  std::size_t patch_size = 2;
  std::size_t hidden = 64;
  int n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ff_width = 128;
  std::size_t input_features = 1;
  std::size_t window = 32;
  ad::OptimizerConfig optimizer;  // Adam
  TrainOptions train;

  void validate() const;
};

// Tokens per window; windows not divisible by the patch size are left-padded
// with their first value.
std::size_t patch_count(std::size_t window, std::size_t patch_size);

// (batch * tokens, patch_size * features) token matrix from window rows.
Tensor patchify(const Tensor& inputs, std::size_t window, std::size_t features, std::size_t patch_size);

class PatchTstForecaster final : public SequenceForecaster {
 public:
  PatchTstForecaster(const PatchConfig& config, std::uint64_t seed);

  Tensor forward(const Tensor& inputs) const override;
  ad::ParameterSet& params() override { return params_; }
  std::size_t window() const override { return config_.window; }
  std::size_t features() const override { return config_.input_features; }
  const PatchConfig& config() const { return config_; }
  std::size_t tokens() const { return patch_count(config_.window, config_.patch_size); }
  const EncoderLayer& layer(std::size_t i) const { return layers_.at(i); }

  // Token embeddings before the encoder stack.
  Tensor embed(const Tensor& inputs) const;

 private:
  PatchConfig config_;
  ad::ParameterSet params_;
  Linear embedding_;
  Tensor positional_;
  std::vector<EncoderLayer> layers_;
  Linear head_;
};

// ---------------------------------------------------------------------------

struct AeConfig {
  std::vector<std::size_t> hidden;  // encoder widths before the latent; empty: {d / 2} when wider than latent
  std::size_t latent = 2;
  ad::OptimizerConfig optimizer;  // Adam
  TrainOptions train = [] {
    TrainOptions t;
    t.max_epochs = 200;
    t.batch_size = 0;
    t.max_train_windows = 0;
    return t;
  }();
};

class Autoencoder {
 public:
  Autoencoder(const AeConfig& config, std::size_t input_dim, std::uint64_t seed);

  // Rows already in scaled space.
  Tensor reconstruct(const Tensor& x) const;
  ad::ParameterSet& params() { return params_; }
  const AeConfig& config() const { return config_; }
  std::size_t input_dim() const { return input_dim_; }
  const std::vector<std::size_t>& widths() const { return widths_; }

  MinMaxScaler scaler;
  TrainLog log;

 private:
  AeConfig config_;
  std::size_t input_dim_;
  std::vector<std::size_t> widths_;  // input, hidden..., latent, hidden..., input
  ad::ParameterSet params_;
  std::vector<Linear> layers_;
};

// ---------------------------------------------------------------------------
// Training

// Shared loop: seeded subset + validation split, mini-batches, clipping,
// early stopping with best-weights restore. Throws Error{NumericFailure} on a
// non-finite loss.
TrainLog fit_forecaster(SequenceForecaster& model, std::span<const SequenceWindow> windows,
                        const ad::OptimizerConfig& optimizer, const TrainOptions& options);

std::unique_ptr<LstmForecaster> train_lstm(const SequenceDataset& dataset, LstmConfig config);
std::unique_ptr<PatchTstForecaster> train_patchtst(const SequenceDataset& dataset, PatchConfig config);
// X rows are raw feature vectors; the scaler is fitted on them.
std::unique_ptr<Autoencoder> train_autoencoder(const std::vector<std::vector<double>>& x, AeConfig config,
                                               std::uint64_t seed);

// (batch, window * features) input and (batch, features) target tensors.
std::pair<Tensor, Tensor> stack_windows(std::span<const SequenceWindow* const> windows);

// ---------------------------------------------------------------------------
// Scoring

// Mean over the disk's test windows of the squared next-step error (scaled
// space, averaged over features). Throws Error{UnknownDisk}.
double forecast_mse(const SequenceForecaster& model, const SequenceDataset& dataset, const DiskId& disk);

using DiskDay = std::pair<DiskId, Date>;
std::map<DiskDay, double> forecast_mse_by_day(const SequenceForecaster& model, const SequenceDataset& dataset);

// Reconstruction MSE of one raw feature row.
double reconstruction_mse(const Autoencoder& model, std::span<const double> raw_row);

// score = min(1, mse / (2 * threshold)): monotone in mse and exactly 1/2 at
// the threshold. A zero threshold (all errors zero) scores 0.
double mse_score(double mse, double threshold);

// Fleet-wide sigma rule: T iff mse > mean + k * std over all given disks.
std::vector<FaultLabel> classify_by_mse(const std::vector<std::pair<DiskId, double>>& mses, Date date, double k = 3.0);

// ---------------------------------------------------------------------------
// Serialization: {"format": "failslow-<kind>", "version": 1, "config": ...,
// "scaler": ..., "params": <checkpoint>}

nlohmann::json to_json(const LstmForecaster& model);
std::unique_ptr<LstmForecaster> lstm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PatchTstForecaster& model);
std::unique_ptr<PatchTstForecaster> patchtst_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Autoencoder& model);
std::unique_ptr<Autoencoder> autoencoder_from_json(const nlohmann::json& j);

}  // namespace failslow::neural
