#pragma once

// CART trees and the two ensembles built from them: a bagged random forest
// classifier and a first-order gradient-boosted ranker with logistic loss.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/core.hpp"

namespace failslow::classical {

using FeatureRows = std::vector<std::vector<double>>;

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf probability (classification) or regression value
};

// Flat node array; nodes[0] is the root. x[feature] <= threshold goes left.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  int depth() const;
};

enum class SplitCriterion { Gini, Variance };

struct TreeParams {
  int max_depth = 8;
  int min_leaf = 1;
  int features_per_split = 0;  // 0: all features
  SplitCriterion criterion = SplitCriterion::Gini;
};

// Fits one CART tree on rows `sample` (may repeat, as in a bootstrap).
DecisionTree fit_tree(const FeatureRows& x, std::span<const double> y, std::span<const std::size_t> sample,
                      const TreeParams& params, std::uint64_t seed);

enum class ForestKind { RandomForest, GBDT };

struct ForestModel {
  ForestKind kind = ForestKind::RandomForest;
  std::vector<DecisionTree> trees;
  double learning_rate = 1.0;  // GBDT only
  double base_score = 0.0;     // GBDT log-odds prior
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<double> train_log_loss;  // GBDT: prior, then one entry per round
};

struct RandomForestParams {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 1;
  int feature_subsample = 0;  // 0: floor(sqrt(d)), at least 1
  std::uint64_t seed = 0;
};

struct GbdtParams {
  int n_rounds = 50;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 1;
  std::uint64_t seed = 0;
};

// y in {0, 1}.
ForestModel train_random_forest(const FeatureRows& x, std::span<const double> y, const RandomForestParams& params,
                                std::vector<std::string> feature_names = {});
ForestModel train_gbdt_ranker(const FeatureRows& x, std::span<const double> y, const GbdtParams& params,
                              std::vector<std::string> feature_names = {});

// RandomForest: fraction of trees voting 1 (leaf probability >= 0.5).
// GBDT: logistic(base_score + learning_rate * sum of leaf values).
double predict_forest(const ForestModel& model, std::span<const double> x);

// Ranker label: 1 iff the disk saw an error in its training segment.
double csr_binary_target(const CsrLabel& label);

using DiskScore = std::pair<DiskId, double>;

// Descending score; ties by ascending DiskId.
std::vector<DiskScore> rank_by_score(std::vector<DiskScore> scores);
std::vector<DiskScore> rank_disks(const ForestModel& model,
                                  const std::vector<std::pair<DiskId, std::vector<double>>>& x_per_disk);

nlohmann::json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& j);

}  // namespace failslow::classical
