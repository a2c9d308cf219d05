#pragma once

// Soft-margin SVM trained in the primal by full-batch subgradient descent on
// hinge loss + L2 (strength 1/C). Inputs are standardized with a scaler that
// is stored in the model. The RBF kernel is approximated with random Fourier
// features so training stays in the primal.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/classical/forest.hpp"

namespace failslow::classical {

enum class SvmKernel { Linear, Rbf };

struct SvmConfig {
  SvmKernel kernel = SvmKernel::Linear;
  double c = 1.0;
  double gamma = 0.1;  // Rbf only
  int epochs = 200;
  int rff_dim = 128;  // Rbf only
  std::uint64_t seed = 0;

  void validate() const;
};

struct SvmModel {
  SvmConfig config;
  std::vector<double> weights;  // standardized feature space (Linear) or RFF space (Rbf)
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<std::string> feature_names;
  std::vector<double> rff_omega;  // rff_dim x n_features, row-major
  std::vector<double> rff_phase;  // rff_dim
};

// y in {-1, +1}; both classes required.
SvmModel train_svm(const FeatureRows& x, std::span<const double> y, const SvmConfig& config,
                   std::vector<std::string> feature_names = {});

double svm_decision(const SvmModel& model, std::span<const double> x);
double svm_predict(const SvmModel& model, std::span<const double> x);  // -1 or +1

// Ranked (feature name, |weight|), descending; ties by name.
std::vector<std::pair<std::string, double>> svm_feature_importance(const SvmModel& model);

// Regularized objective lambda/2 |w|^2 + mean hinge.
double svm_objective(std::span<const double> w, double b, const FeatureRows& z, std::span<const double> y,
                     double lambda);

// One full-batch subgradient step of the objective above, in place.
void svm_subgradient_step(std::vector<double>& w, double& b, const FeatureRows& z, std::span<const double> y,
                          double lambda, double eta);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// k-fold cross-validation

using Predictor = std::function<double(std::span<const double>)>;
using TrainFn = std::function<Predictor(const FeatureRows&, std::span<const double>)>;
using MetricFn = std::function<double(std::span<const double> truth, std::span<const double> predicted)>;

// Deterministic fold of each row: position in a seeded shuffle, modulo k.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed);

std::vector<double> cross_validate(const FeatureRows& x, std::span<const double> y, std::size_t k,
                                   const TrainFn& train_fn, const MetricFn& metric, std::uint64_t seed = 0);

double accuracy(std::span<const double> truth, std::span<const double> predicted);

}  // namespace failslow::classical
