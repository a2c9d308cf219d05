#pragma once

// Isolation forest: random-split trees on subsamples; points isolated after
// few splits are anomalous.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/classical/forest.hpp"

namespace failslow::classical {

inline constexpr double kEulerGamma = 0.5772156649;

// Expected unsuccessful-search path length in a BST of n points:
// c(n) = 2 H(n-1) - 2 (n-1) / n with H(i) = ln(i) + gamma; c(n) = 0 for n <= 1.
double path_length_normalizer(std::size_t n);

// s = 2^(-mean_path / c(subsample)).
double iforest_score_from_path(double mean_path, std::size_t subsample);

struct ITreeNode {
  int feature = -1;  // -1 marks an external node
  double split = 0.0;
  int left = -1;  // x[feature] < split
  int right = -1;
  std::size_t size = 0;  // training points reaching an external node
};

struct IsolationTree {
  std::vector<ITreeNode> nodes;

  // Edges to the external node plus c(size) for unsplit remainders.
  double path_length(std::span<const double> x) const;
  int depth() const;
  int split_count() const;
};

struct IForestParams {
  int n_trees = 100;
  std::size_t subsample = 256;  // capped at |X|
  std::uint64_t seed = 0;
};

struct IForestModel {
  std::vector<IsolationTree> trees;
  std::size_t subsample = 0;
  std::size_t n_features = 0;

  std::size_t n_trees() const { return trees.size(); }
  int depth_limit() const;
};

IForestModel train_isolation_forest(const FeatureRows& x, const IForestParams& params);

double mean_path_length(const IForestModel& model, std::span<const double> x);
// In (0, 1); higher is more anomalous.
double iforest_score(const IForestModel& model, std::span<const double> x);

nlohmann::json to_json(const IForestModel& model);
IForestModel iforest_from_json(const nlohmann::json& j);

}  // namespace failslow::classical
