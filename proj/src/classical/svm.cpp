#include "failslow/classical/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "failslow/rng.hpp"

namespace failslow::classical {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> standardize(const SvmModel& m, std::span<const double> x) {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m.mean[i]) / m.scale[i];
  return z;
}

std::vector<double> embed(const SvmModel& m, std::span<const double> x) {
  if (x.size() != m.mean.size()) {
    throw Error(ErrorKind::Shape, "SVM expects " + std::to_string(m.mean.size()) + " features, got " +
                                      std::to_string(x.size()));
  }
  auto z = standardize(m, x);
  if (m.config.kernel == SvmKernel::Linear) return z;
  const std::size_t dim = m.rff_phase.size();
  const std::size_t d = z.size();
  std::vector<double> phi(dim);
  const double k = std::sqrt(2.0 / static_cast<double>(dim));
  for (std::size_t j = 0; j < dim; ++j) {
    phi[j] = k * std::cos(dot(std::span<const double>(m.rff_omega).subspan(j * d, d), z) + m.rff_phase[j]);
  }
  return phi;
}

}  // namespace

void SvmConfig::validate() const {
  if (!(c > 0)) throw Error(ErrorKind::Config, "SVM C must be > 0");
  if (kernel == SvmKernel::Rbf && !(gamma > 0)) throw Error(ErrorKind::Config, "SVM gamma must be > 0");
  if (epochs < 1) throw Error(ErrorKind::Config, "SVM epochs must be >= 1");
  if (kernel == SvmKernel::Rbf && rff_dim < 1) throw Error(ErrorKind::Config, "rff_dim must be >= 1");
}

double svm_objective(std::span<const double> w, double b, const FeatureRows& z, std::span<const double> y,
                     double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) hinge += std::max(0.0, 1.0 - y[i] * (dot(w, z[i]) + b));
  return 0.5 * lambda * dot(w, w) + hinge / static_cast<double>(z.size());
}

void svm_subgradient_step(std::vector<double>& w, double& b, const FeatureRows& z, std::span<const double> y,
                          double lambda, double eta) {
  const double n = static_cast<double>(z.size());
  std::vector<double> gw(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) gw[j] = lambda * w[j];
  double gb = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (y[i] * (dot(w, z[i]) + b) < 1.0) {
      for (std::size_t j = 0; j < w.size(); ++j) gw[j] -= y[i] * z[i][j] / n;
      gb -= y[i] / n;
    }
  }
  for (std::size_t j = 0; j < w.size(); ++j) w[j] -= eta * gw[j];
  b -= eta * gb;
}

SvmModel train_svm(const FeatureRows& x, std::span<const double> y, const SvmConfig& config,
                   std::vector<std::string> feature_names) {
  config.validate();
  if (x.empty()) throw Error(ErrorKind::EmptyInput, "SVM needs training rows");
  if (x.size() != y.size()) throw Error(ErrorKind::Shape, "SVM rows/labels length mismatch");
  const std::size_t d = x.front().size();
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (x[i].size() != d) throw Error(ErrorKind::Shape, "ragged feature rows");
    if (y[i] == 1.0) {
      pos = true;
    } else if (y[i] == -1.0) {
      neg = true;
    } else {
      throw Error(ErrorKind::Contract, "SVM labels must be -1 or +1");
    }
  }
  if (!pos || !neg) throw Error(ErrorKind::DegenerateTraining, "SVM training needs both classes");

  SvmModel m;
  m.config = config;
  m.feature_names = std::move(feature_names);
  if (m.feature_names.empty()) {
    for (std::size_t j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
  }
  const double n = static_cast<double>(x.size());
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += row[j] / n;
  for (const auto& row : x)
    for (std::size_t j = 0; j < d; ++j) m.scale[j] += (row[j] - m.mean[j]) * (row[j] - m.mean[j]) / n;
  for (auto& s : m.scale) s = s > 0 ? std::sqrt(s) : 1.0;

  if (config.kernel == SvmKernel::Rbf) {
    Rng rng(derive_seed(config.seed, "svm-rff"));
    const auto dim = static_cast<std::size_t>(config.rff_dim);
    m.rff_omega.resize(dim * d);
    for (auto& v : m.rff_omega) v = rng.normal(0.0, std::sqrt(2.0 * config.gamma));
    m.rff_phase.resize(dim);
    for (auto& v : m.rff_phase) v = rng.uniform(0.0, 2.0 * M_PI);
  }

  FeatureRows z;
  z.reserve(x.size());
  for (const auto& row : x) z.push_back(embed(m, row));
  const std::size_t dim = z.front().size();

  // Pegasos step size 1/(lambda t); the best iterate by objective is kept.
  const double lambda = 1.0 / config.c;
  std::vector<double> w(dim, 0.0), best_w = w;
  double b = 0.0, best_b = 0.0;
  double best_obj = svm_objective(w, b, z, y, lambda);
  for (int t = 1; t <= config.epochs; ++t) {
    svm_subgradient_step(w, b, z, y, lambda, 1.0 / (lambda * t));
    const double obj = svm_objective(w, b, z, y, lambda);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }
  m.weights = std::move(best_w);
  m.bias = best_b;
  return m;
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
  return dot(model.weights, embed(model, x)) + model.bias;
}

double svm_predict(const SvmModel& model, std::span<const double> x) {
  return svm_decision(model, x) >= 0.0 ? 1.0 : -1.0;
}

std::vector<std::pair<std::string, double>> svm_feature_importance(const SvmModel& model) {
  if (model.config.kernel != SvmKernel::Linear) {
    throw Error(ErrorKind::Unsupported, "feature importance is only defined for the linear kernel");
  }
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t j = 0; j < model.weights.size(); ++j) out.emplace_back(model.feature_names[j], std::abs(model.weights[j]));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

nlohmann::json to_json(const SvmModel& m) {
  return {{"format", "failslow-svm"},
          {"version", 1},
          {"kernel", m.config.kernel == SvmKernel::Linear ? "linear" : "rbf"},
          {"c", m.config.c},
          {"gamma", m.config.gamma},
          {"epochs", m.config.epochs},
          {"rff_dim", m.config.rff_dim},
          {"seed", m.config.seed},
          {"weights", m.weights},
          {"bias", m.bias},
          {"scaler", {{"mean", m.mean}, {"scale", m.scale}}},
          {"feature_names", m.feature_names},
          {"rff_omega", m.rff_omega},
          {"rff_phase", m.rff_phase}};
}

SvmModel svm_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "failslow-svm" || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Parse, "not a version-1 failslow-svm model");
  }
  SvmModel m;
  const auto kernel = j.at("kernel").get<std::string>();
  if (kernel != "linear" && kernel != "rbf") throw Error(ErrorKind::Parse, "unknown SVM kernel " + kernel);
  m.config.kernel = kernel == "linear" ? SvmKernel::Linear : SvmKernel::Rbf;
  m.config.c = j.at("c").get<double>();
  m.config.gamma = j.at("gamma").get<double>();
  m.config.epochs = j.at("epochs").get<int>();
  m.config.rff_dim = j.at("rff_dim").get<int>();
  m.config.seed = j.at("seed").get<std::uint64_t>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.mean = j.at("scaler").at("mean").get<std::vector<double>>();
  m.scale = j.at("scaler").at("scale").get<std::vector<double>>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.rff_omega = j.at("rff_omega").get<std::vector<double>>();
  m.rff_phase = j.at("rff_phase").get<std::vector<double>>();
  return m;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % k;
  return fold;
}

std::vector<double> cross_validate(const FeatureRows& x, std::span<const double> y, std::size_t k,
                                   const TrainFn& train_fn, const MetricFn& metric, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidFolds, "k must be >= 2");
  if (k > x.size()) {
    throw Error(ErrorKind::InvalidFolds, "k = " + std::to_string(k) + " exceeds " + std::to_string(x.size()) + " rows");
  }
  if (x.size() != y.size()) throw Error(ErrorKind::Shape, "rows/labels length mismatch");
  const auto fold = fold_assignment(x.size(), k, seed);
  std::vector<double> scores;
  scores.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    FeatureRows train_x, test_x;
    std::vector<double> train_y, test_y;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold[i] == f) {
        test_x.push_back(x[i]);
        test_y.push_back(y[i]);
      } else {
        train_x.push_back(x[i]);
        train_y.push_back(y[i]);
      }
    }
    const Predictor predict = train_fn(train_x, train_y);
    std::vector<double> predicted;
    predicted.reserve(test_x.size());
    for (const auto& row : test_x) predicted.push_back(predict(row));
    scores.push_back(metric(test_y, predicted));
  }
  return scores;
}

double accuracy(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.empty() || truth.size() != predicted.size()) throw Error(ErrorKind::Shape, "accuracy needs equal, non-empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace failslow::classical
