#include "failslow/neural/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>

#include "failslow/ingest.hpp"
#include "failslow/labeling.hpp"

namespace failslow::neural {
namespace {

using BatchLoss = std::function<Tensor(std::span<const std::size_t>)>;

std::vector<std::vector<double>> snapshot(const ad::ParameterSet& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.tensors().size());
  for (const auto& t : params.tensors()) out.push_back(t.data());
  return out;
}

void restore(ad::ParameterSet& params, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) params.tensors()[i].mutable_data() = values[i];
}

double weighted_loss(const BatchLoss& loss_fn, std::span<const std::size_t> items, std::size_t batch) {
  ad::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t start = 0; start < items.size(); start += batch) {
    const auto chunk = items.subspan(start, std::min(batch, items.size() - start));
    total += loss_fn(chunk).item() * static_cast<double>(chunk.size());
  }
  return total / static_cast<double>(items.size());
}

TrainLog run_training(ad::ParameterSet& params, std::size_t n_items, const BatchLoss& loss_fn,
                      const ad::OptimizerConfig& optimizer, const TrainOptions& options) {
  optimizer.validate();
  if (n_items == 0) throw Error(ErrorKind::EmptyInput, "no training examples");
  if (options.max_epochs < 1) throw Error(ErrorKind::Config, "max_epochs must be >= 1");
  if (options.validation_fraction < 0.0 || options.validation_fraction >= 1.0) {
    throw Error(ErrorKind::Config, "validation_fraction must be in [0, 1)");
  }

  Rng rng(options.seed);
  std::vector<std::size_t> items(n_items);
  std::iota(items.begin(), items.end(), 0);
  rng.shuffle(items);
  if (options.max_train_windows > 0 && items.size() > options.max_train_windows) items.resize(options.max_train_windows);
  std::size_t n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(items.size())));
  if (n_val >= items.size()) n_val = 0;
  std::vector<std::size_t> val(items.end() - static_cast<std::ptrdiff_t>(n_val), items.end());
  std::vector<std::size_t> train(items.begin(), items.end() - static_cast<std::ptrdiff_t>(n_val));
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());

  const std::size_t batch = options.batch_size == 0 ? train.size() : std::min(options.batch_size, train.size());
  const bool full_batch = batch == train.size();

  TrainLog log;
  ad::OptimizerState state;
  std::vector<double> monitored;
  auto best = snapshot(params);
  double best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    if (!full_batch) rng.shuffle(train);
    double total = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const auto chunk = std::span<const std::size_t>(train).subspan(start, std::min(batch, train.size() - start));
      params.zero_grad();
      const Tensor loss = loss_fn(chunk);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::NumericFailure, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      ad::backward(loss);
      ad::optimizer_step(params.tensors(), optimizer, state);
      total += value * static_cast<double>(chunk.size());
    }
    params.zero_grad();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(train.size());
    rec.val_loss = val.empty() ? std::numeric_limits<double>::quiet_NaN() : weighted_loss(loss_fn, val, batch);
    log.epochs.push_back(rec);

    const double watched = val.empty() ? rec.train_loss : rec.val_loss;
    if (!std::isfinite(watched)) {
      throw Error(ErrorKind::NumericFailure, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    monitored.push_back(watched);
    if (watched < best_loss) {
      // With the training loss as monitor, the recorded value belongs to the
      // weights before this epoch's updates; keeping the post-update weights
      // is the closest available snapshot.
      best_loss = watched;
      best = snapshot(params);
      log.best_epoch = epoch;
    }
    if (optimizer.early_stop_patience && ad::early_stop(monitored, *optimizer.early_stop_patience)) {
      log.stopped_early = true;
      break;
    }
  }
  restore(params, best);
  return log;
}

nlohmann::json optimizer_json(const ad::OptimizerConfig& c) {
  nlohmann::json j = {{"kind", c.kind == ad::OptimizerKind::Adam ? "adam" : "rmsprop"},
                      {"learning_rate", c.learning_rate},
                      {"rho", c.rho},
                      {"beta1", c.beta1},
                      {"beta2", c.beta2},
                      {"eps", c.eps}};
  j["clip_norm"] = c.clip_norm ? nlohmann::json(*c.clip_norm) : nlohmann::json(nullptr);
  j["early_stop_patience"] = c.early_stop_patience ? nlohmann::json(*c.early_stop_patience) : nlohmann::json(nullptr);
  return j;
}

ad::OptimizerConfig optimizer_from_json(const nlohmann::json& j) {
  ad::OptimizerConfig c;
  c.kind = j.at("kind").get<std::string>() == "adam" ? ad::OptimizerKind::Adam : ad::OptimizerKind::RMSprop;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.rho = j.at("rho").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  if (!j.at("clip_norm").is_null()) c.clip_norm = j.at("clip_norm").get<double>(); else c.clip_norm.reset();
  if (!j.at("early_stop_patience").is_null()) {
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
  } else {
    c.early_stop_patience.reset();
  }
  return c;
}

nlohmann::json train_json(const TrainOptions& t) {
  return {{"max_epochs", t.max_epochs},
          {"batch_size", t.batch_size},
          {"max_train_windows", t.max_train_windows},
          {"validation_fraction", t.validation_fraction},
          {"seed", t.seed}};
}

TrainOptions train_from_json(const nlohmann::json& j) {
  TrainOptions t;
  t.max_epochs = j.at("max_epochs").get<int>();
  t.batch_size = j.at("batch_size").get<std::size_t>();
  t.max_train_windows = j.at("max_train_windows").get<std::size_t>();
  t.validation_fraction = j.at("validation_fraction").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

void check_header(const nlohmann::json& j, const char* format) {
  if (j.value("format", "") != format || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Parse, std::string("not a version-1 ") + format + " model");
  }
}

}  // namespace

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_real(e.train_loss) << ',';
    if (std::isfinite(e.val_loss)) out << format_real(e.val_loss);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

void LstmConfig::validate() const {
  if (n_layers < 1) throw Error(ErrorKind::Config, "LSTM n_layers must be >= 1");
  if (hidden < 1) throw Error(ErrorKind::Config, "LSTM hidden must be >= 1");
  if (input_features != 1 && input_features != 2) throw Error(ErrorKind::Config, "LSTM input_features must be 1 or 2");
  if (window < 1) throw Error(ErrorKind::Config, "window must be >= 1");
  optimizer.validate();
}

LstmForecaster::LstmForecaster(const LstmConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  std::size_t in = config_.input_features;
  for (int l = 0; l < config_.n_layers; ++l) {
    cells_.emplace_back(params_, "lstm" + std::to_string(l), in, config_.hidden, rng);
    in = config_.hidden;
  }
  head_ = Linear(params_, "head", config_.hidden, config_.input_features, rng);
}

Tensor LstmForecaster::forward(const Tensor& inputs) const {
  const std::size_t f = config_.input_features;
  if (inputs.cols() != config_.window * f) {
    throw Error(ErrorKind::Shape, "LSTM expects rows of " + std::to_string(config_.window * f) + " values, got " +
                                      inputs.shape_str());
  }
  std::vector<LstmState> states;
  for (const auto& cell : cells_) states.push_back(cell.initial_state(inputs.rows()));
  Tensor x;
  for (std::size_t t = 0; t < config_.window; ++t) {
    x = ad::slice_cols(inputs, t * f, f);
    for (std::size_t l = 0; l < cells_.size(); ++l) {
      states[l] = cells_[l](x, states[l]);
      x = states[l].h;
    }
  }
  return head_(x);
}

// ---------------------------------------------------------------------------

void PatchConfig::validate() const {
  if (patch_size < 1) throw Error(ErrorKind::Config, "patch_size must be >= 1");
  if (n_heads < 1 || hidden % n_heads != 0) {
    throw Error(ErrorKind::Config, "hidden " + std::to_string(hidden) + " not divisible by n_heads " +
                                       std::to_string(n_heads));
  }
  if (n_layers < 1 || ff_width < 1) throw Error(ErrorKind::Config, "n_layers and ff_width must be >= 1");
  if (input_features != 1 && input_features != 2) throw Error(ErrorKind::Config, "input_features must be 1 or 2");
  if (window < 1) throw Error(ErrorKind::Config, "window must be >= 1");
  optimizer.validate();
}

std::size_t patch_count(std::size_t window, std::size_t patch_size) {
  if (patch_size == 0) throw Error(ErrorKind::Config, "patch_size must be >= 1");
  return (window + patch_size - 1) / patch_size;
}

Tensor patchify(const Tensor& inputs, std::size_t window, std::size_t features, std::size_t patch_size) {
  if (inputs.cols() != window * features) throw Error(ErrorKind::Shape, "patchify: unexpected input " + inputs.shape_str());
  const std::size_t tokens = patch_count(window, patch_size);
  const std::size_t pad = tokens * patch_size - window;
  const std::size_t width = patch_size * features;
  std::vector<double> out;
  out.reserve(inputs.rows() * tokens * width);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const double* row = inputs.data().data() + r * window * features;
    for (std::size_t p = 0; p < pad; ++p) out.insert(out.end(), row, row + features);
    out.insert(out.end(), row, row + window * features);
  }
  return Tensor(inputs.rows() * tokens, width, std::move(out));
}

PatchTstForecaster::PatchTstForecaster(const PatchConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  embedding_ = Linear(params_, "embedding", config_.patch_size * config_.input_features, config_.hidden, rng);
  std::vector<double> pos(tokens() * config_.hidden);
  for (auto& v : pos) v = rng.normal(0.0, 0.02);
  positional_ = params_.add("positional", Tensor(tokens(), config_.hidden, std::move(pos), true));
  for (int l = 0; l < config_.n_layers; ++l) {
    layers_.emplace_back(params_, "encoder" + std::to_string(l), config_.hidden, config_.n_heads, config_.ff_width, rng);
  }
  head_ = Linear(params_, "head", config_.hidden, config_.input_features, rng);
}

Tensor PatchTstForecaster::embed(const Tensor& inputs) const {
  const Tensor tokens_in = patchify(inputs, config_.window, config_.input_features, config_.patch_size);
  const std::vector<Tensor> tiled(inputs.rows(), positional_);
  return ad::add(embedding_(tokens_in), ad::concat_rows(tiled));
}

Tensor PatchTstForecaster::forward(const Tensor& inputs) const {
  const std::size_t n = tokens();
  Tensor x = embed(inputs);
  for (const auto& layer : layers_) x = layer(x, n);
  std::vector<Tensor> last;
  last.reserve(inputs.rows());
  for (std::size_t b = 0; b < inputs.rows(); ++b) last.push_back(ad::slice_rows(x, b * n + n - 1, 1));
  return head_(ad::concat_rows(last));
}

// ---------------------------------------------------------------------------

Autoencoder::Autoencoder(const AeConfig& config, std::size_t input_dim, std::uint64_t seed)
    : config_(config), input_dim_(input_dim) {
  if (config_.latent < 1 || config_.latent >= input_dim) {
    throw Error(ErrorKind::Config, "latent dim " + std::to_string(config_.latent) + " must be in [1, input dim " +
                                       std::to_string(input_dim) + ")");
  }
  config_.optimizer.validate();
  std::vector<std::size_t> hidden = config_.hidden;
  if (hidden.empty() && input_dim / 2 > config_.latent) hidden.push_back(input_dim / 2);
  config_.hidden = hidden;
  widths_.push_back(input_dim);
  widths_.insert(widths_.end(), hidden.begin(), hidden.end());
  widths_.push_back(config_.latent);
  widths_.insert(widths_.end(), hidden.rbegin(), hidden.rend());
  widths_.push_back(input_dim);

  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    layers_.emplace_back(params_, "layer" + std::to_string(i), widths_[i], widths_[i + 1], rng);
  }
}

Tensor Autoencoder::reconstruct(const Tensor& x) const {
  if (x.cols() != input_dim_) throw Error(ErrorKind::Shape, "autoencoder expects " + std::to_string(input_dim_) + " columns");
  const std::size_t latent_layer = config_.hidden.size();  // output of this layer is the latent code
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    const bool linear_output = i == latent_layer || i + 1 == layers_.size();
    if (!linear_output) h = ad::tanh(h);
  }
  return h;
}

// ---------------------------------------------------------------------------

std::pair<Tensor, Tensor> stack_windows(std::span<const SequenceWindow* const> windows) {
  if (windows.empty()) throw Error(ErrorKind::EmptyInput, "empty window batch");
  const std::size_t in = windows.front()->input.size();
  const std::size_t out = windows.front()->target.size();
  std::vector<double> x, y;
  x.reserve(windows.size() * in);
  y.reserve(windows.size() * out);
  for (const auto* w : windows) {
    if (w->input.size() != in || w->target.size() != out) throw Error(ErrorKind::Shape, "ragged window batch");
    x.insert(x.end(), w->input.begin(), w->input.end());
    y.insert(y.end(), w->target.begin(), w->target.end());
  }
  return {Tensor(windows.size(), in, std::move(x)), Tensor(windows.size(), out, std::move(y))};
}

TrainLog fit_forecaster(SequenceForecaster& model, std::span<const SequenceWindow> windows,
                        const ad::OptimizerConfig& optimizer, const TrainOptions& options) {
  std::vector<const SequenceWindow*> batch;
  BatchLoss loss_fn = [&](std::span<const std::size_t> idx) {
    batch.clear();
    for (auto i : idx) batch.push_back(&windows[i]);
    auto [x, y] = stack_windows(batch);
    return ad::mse_loss(model.forward(x), y);
  };
  return run_training(model.params(), windows.size(), loss_fn, optimizer, options);
}

std::unique_ptr<LstmForecaster> train_lstm(const SequenceDataset& dataset, LstmConfig config) {
  if (dataset.train.empty()) throw Error(ErrorKind::EmptyInput, "no training sequences");
  config.input_features = dataset.features();
  config.window = dataset.options.window;
  auto model = std::make_unique<LstmForecaster>(config, derive_seed(config.train.seed, "lstm-init"));
  model->scaler = dataset.scaler;
  model->log = fit_forecaster(*model, dataset.train, config.optimizer, config.train);
  return model;
}

std::unique_ptr<PatchTstForecaster> train_patchtst(const SequenceDataset& dataset, PatchConfig config) {
  if (dataset.train.empty()) throw Error(ErrorKind::EmptyInput, "no training sequences");
  config.input_features = dataset.features();
  config.window = dataset.options.window;
  auto model = std::make_unique<PatchTstForecaster>(config, derive_seed(config.train.seed, "patchtst-init"));
  model->scaler = dataset.scaler;
  model->log = fit_forecaster(*model, dataset.train, config.optimizer, config.train);
  return model;
}

std::unique_ptr<Autoencoder> train_autoencoder(const std::vector<std::vector<double>>& x, AeConfig config,
                                               std::uint64_t seed) {
  if (x.empty()) throw Error(ErrorKind::EmptyInput, "autoencoder needs training rows");
  const std::size_t d = x.front().size();
  std::vector<double> flat;
  flat.reserve(x.size() * d);
  for (const auto& row : x) {
    if (row.size() != d) throw Error(ErrorKind::Shape, "ragged autoencoder rows");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  config.train.seed = seed;
  auto model = std::make_unique<Autoencoder>(config, d, derive_seed(seed, "autoencoder-init"));
  model->scaler = MinMaxScaler::fit(flat, d);
  model->scaler.transform_inplace(flat);

  std::vector<double> batch;
  BatchLoss loss_fn = [&](std::span<const std::size_t> idx) {
    batch.clear();
    for (auto i : idx) batch.insert(batch.end(), flat.begin() + static_cast<std::ptrdiff_t>(i * d),
                                    flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    const Tensor input(idx.size(), d, batch);
    return ad::mse_loss(model->reconstruct(input), input);
  };
  model->log = run_training(model->params(), x.size(), loss_fn, model->config().optimizer, model->config().train);
  return model;
}

// ---------------------------------------------------------------------------

std::map<DiskDay, double> forecast_mse_by_day(const SequenceForecaster& model, const SequenceDataset& dataset) {
  ad::NoGradGuard no_grad;
  std::map<DiskDay, std::pair<double, std::size_t>> acc;
  constexpr std::size_t kBatch = 256;
  std::vector<const SequenceWindow*> batch;
  for (std::size_t start = 0; start < dataset.test.size(); start += kBatch) {
    batch.clear();
    for (std::size_t i = start; i < std::min(dataset.test.size(), start + kBatch); ++i) batch.push_back(&dataset.test[i]);
    auto [x, y] = stack_windows(batch);
    const Tensor pred = model.forward(x);
    const std::size_t f = y.cols();
    for (std::size_t r = 0; r < batch.size(); ++r) {
      double se = 0.0;
      for (std::size_t c = 0; c < f; ++c) {
        const double d = pred.at(r, c) - y.at(r, c);
        se += d * d;
      }
      auto& slot = acc[{dataset.disks[batch[r]->disk], batch[r]->date}];
      slot.first += se / static_cast<double>(f);
      slot.second += 1;
    }
  }
  std::map<DiskDay, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / static_cast<double>(v.second);
  return out;
}

double forecast_mse(const SequenceForecaster& model, const SequenceDataset& dataset, const DiskId& disk) {
  const auto index = dataset.disk_index(disk);
  if (!index) throw Error(ErrorKind::UnknownDisk, disk.str() + " is not in the dataset");
  std::vector<const SequenceWindow*> mine;
  for (const auto& w : dataset.test) {
    if (w.disk == *index) mine.push_back(&w);
  }
  if (mine.empty()) throw Error(ErrorKind::UnknownDisk, disk.str() + " has no test windows");
  ad::NoGradGuard no_grad;
  auto [x, y] = stack_windows(mine);
  const Tensor pred = model.forward(x);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - y.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.size());
}

double reconstruction_mse(const Autoencoder& model, std::span<const double> raw_row) {
  if (raw_row.size() != model.input_dim()) throw Error(ErrorKind::Shape, "autoencoder row width mismatch");
  std::vector<double> z(raw_row.begin(), raw_row.end());
  model.scaler.transform_inplace(z);
  ad::NoGradGuard no_grad;
  const Tensor input(1, z.size(), z);
  return ad::mse_loss(model.reconstruct(input), input).item();
}

double mse_score(double mse, double threshold) {
  if (!(threshold > 0.0)) return 0.0;
  return std::min(1.0, mse / (2.0 * threshold));
}

std::vector<FaultLabel> classify_by_mse(const std::vector<std::pair<DiskId, double>>& mses, Date date, double k) {
  if (mses.empty()) throw Error(ErrorKind::EmptyInput, "no disks to classify");
  std::vector<double> values;
  values.reserve(mses.size());
  for (const auto& [id, m] : mses) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw Error(ErrorKind::NumericFailure, "invalid MSE for " + id.str());
    values.push_back(m);
  }
  const auto thr = compute_sigma_threshold(values, k);
  std::vector<FaultLabel> out;
  out.reserve(mses.size());
  for (const auto& [id, m] : mses) {
    out.push_back(FaultLabel{id, date, m > thr.threshold ? Verdict::T : Verdict::F, mse_score(m, thr.threshold)});
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const LstmForecaster& model) {
  const auto& c = model.config();
  auto& self = const_cast<LstmForecaster&>(model);
  return {{"format", "failslow-lstm"},
          {"version", 1},
          {"config",
           {{"n_layers", c.n_layers},
            {"hidden", c.hidden},
            {"input_features", c.input_features},
            {"window", c.window},
            {"optimizer", optimizer_json(c.optimizer)},
            {"train", train_json(c.train)}}},
          {"scaler", model.scaler.to_json()},
          {"params", self.params().to_json()}};
}

std::unique_ptr<LstmForecaster> lstm_from_json(const nlohmann::json& j) {
  check_header(j, "failslow-lstm");
  const auto& jc = j.at("config");
  LstmConfig c;
  c.n_layers = jc.at("n_layers").get<int>();
  c.hidden = jc.at("hidden").get<std::size_t>();
  c.input_features = jc.at("input_features").get<std::size_t>();
  c.window = jc.at("window").get<std::size_t>();
  c.optimizer = optimizer_from_json(jc.at("optimizer"));
  c.train = train_from_json(jc.at("train"));
  auto model = std::make_unique<LstmForecaster>(c, 0);
  model->scaler = MinMaxScaler::from_json(j.at("scaler"));
  model->params().load_json(j.at("params"));
  return model;
}

nlohmann::json to_json(const PatchTstForecaster& model) {
  const auto& c = model.config();
  auto& self = const_cast<PatchTstForecaster&>(model);
  return {{"format", "failslow-patchtst"},
          {"version", 1},
          {"config",
           {{"patch_size", c.patch_size},
            {"hidden", c.hidden},
            {"n_layers", c.n_layers},
            {"n_heads", c.n_heads},
            {"ff_width", c.ff_width},
            {"input_features", c.input_features},
            {"window", c.window},
            {"optimizer", optimizer_json(c.optimizer)},
            {"train", train_json(c.train)}}},
          {"scaler", model.scaler.to_json()},
          {"params", self.params().to_json()}};
}

std::unique_ptr<PatchTstForecaster> patchtst_from_json(const nlohmann::json& j) {
  check_header(j, "failslow-patchtst");
  const auto& jc = j.at("config");
  PatchConfig c;
  c.patch_size = jc.at("patch_size").get<std::size_t>();
  c.hidden = jc.at("hidden").get<std::size_t>();
  c.n_layers = jc.at("n_layers").get<int>();
  c.n_heads = jc.at("n_heads").get<std::size_t>();
  c.ff_width = jc.at("ff_width").get<std::size_t>();
  c.input_features = jc.at("input_features").get<std::size_t>();
  c.window = jc.at("window").get<std::size_t>();
  c.optimizer = optimizer_from_json(jc.at("optimizer"));
  c.train = train_from_json(jc.at("train"));
  auto model = std::make_unique<PatchTstForecaster>(c, 0);
  model->scaler = MinMaxScaler::from_json(j.at("scaler"));
  model->params().load_json(j.at("params"));
  return model;
}

nlohmann::json to_json(const Autoencoder& model) {
  const auto& c = model.config();
  auto& self = const_cast<Autoencoder&>(model);
  return {{"format", "failslow-autoencoder"},
          {"version", 1},
          {"config",
           {{"hidden", c.hidden},
            {"latent", c.latent},
            {"input_dim", model.input_dim()},
            {"optimizer", optimizer_json(c.optimizer)},
            {"train", train_json(c.train)}}},
          {"scaler", model.scaler.to_json()},
          {"params", self.params().to_json()}};
}

std::unique_ptr<Autoencoder> autoencoder_from_json(const nlohmann::json& j) {
  check_header(j, "failslow-autoencoder");
  const auto& jc = j.at("config");
  AeConfig c;
  c.hidden = jc.at("hidden").get<std::vector<std::size_t>>();
  c.latent = jc.at("latent").get<std::size_t>();
  c.optimizer = optimizer_from_json(jc.at("optimizer"));
  c.train = train_from_json(jc.at("train"));
  auto model = std::make_unique<Autoencoder>(c, jc.at("input_dim").get<std::size_t>(), 0);
  model->scaler = MinMaxScaler::from_json(j.at("scaler"));
  model->params().load_json(j.at("params"));
  return model;
}

}  // namespace failslow::neural
