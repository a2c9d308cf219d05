#include "failslow/classical/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "failslow/rng.hpp"

namespace failslow::classical {
namespace {

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_training_input(const FeatureRows& x, std::span<const double> y) {
  if (x.empty()) throw Error(ErrorKind::EmptyInput, "no training rows");
  if (x.size() != y.size()) {
    throw Error(ErrorKind::Shape, std::to_string(x.size()) + " rows but " + std::to_string(y.size()) + " labels");
  }
  const std::size_t d = x.front().size();
  if (d == 0) throw Error(ErrorKind::Shape, "rows have no features");
  for (const auto& row : x) {
    if (row.size() != d) throw Error(ErrorKind::Shape, "ragged feature rows");
  }
}

// Weighted impurity n * impurity from sufficient statistics.
double node_cost(SplitCriterion criterion, double n, double sum, double sum_sq) {
  if (n <= 0) return 0.0;
  const double mean = sum / n;
  if (criterion == SplitCriterion::Gini) return n * 2.0 * mean * (1.0 - mean);
  return std::max(0.0, sum_sq - n * mean * mean);
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureRows& x, std::span<const double> y, const TreeParams& params, std::uint64_t seed)
      : x_(x), y_(y), params_(params), rng_(seed), n_features_(x.front().size()) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double cost = 0.0;
  };

  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    double sum = 0.0, sum_sq = 0.0;
    for (auto r : rows) {
      sum += y_[r];
      sum_sq += y_[r] * y_[r];
    }
    const double n = static_cast<double>(rows.size());
    tree_.nodes[static_cast<std::size_t>(index)].value = sum / n;
    const double cost = node_cost(params_.criterion, n, sum, sum_sq);

    if (depth >= params_.max_depth || rows.size() < 2 * static_cast<std::size_t>(params_.min_leaf) || cost <= 1e-12) {
      return index;
    }
    const Split split = best_split(rows, cost);
    if (split.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_[r][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> features(n_features_);
    std::iota(features.begin(), features.end(), 0);
    const auto m = static_cast<std::size_t>(params_.features_per_split);
    if (m == 0 || m >= n_features_) return features;
    // Partial Fisher-Yates: first m entries are a uniform subset.
    for (std::size_t i = 0; i < m; ++i) std::swap(features[i], features[i + rng_.index(n_features_ - i)]);
    features.resize(m);
    std::sort(features.begin(), features.end());
    return features;
  }

  Split best_split(const std::vector<std::size_t>& rows, double parent_cost) {
    Split best;
    best.cost = parent_cost - 1e-12;
    const auto min_leaf = static_cast<std::size_t>(params_.min_leaf);
    std::vector<std::pair<double, double>> col(rows.size());
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {x_[rows[i]][f], y_[rows[i]]};
      std::sort(col.begin(), col.end());
      double total = 0.0, total_sq = 0.0;
      for (const auto& [v, t] : col) {
        total += t;
        total_sq += t * t;
      }
      double ls = 0.0, lsq = 0.0;
      const double n = static_cast<double>(col.size());
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        ls += col[i].second;
        lsq += col[i].second * col[i].second;
        if (col[i].first == col[i + 1].first) continue;
        const std::size_t nl = i + 1;
        if (nl < min_leaf || col.size() - nl < min_leaf) continue;
        const double dl = static_cast<double>(nl);
        const double cost = node_cost(params_.criterion, dl, ls, lsq) +
                            node_cost(params_.criterion, n - dl, total - ls, total_sq - lsq);
        if (cost < best.cost) {
          best.cost = cost;
          best.feature = static_cast<int>(f);
          best.threshold = 0.5 * (col[i].first + col[i + 1].first);
        }
      }
    }
    return best;
  }

  const FeatureRows& x_;
  std::span<const double> y_;
  TreeParams params_;
  Rng rng_;
  std::size_t n_features_;
  DecisionTree tree_;
};

double log_loss(std::span<const double> y, std::span<const double> margin) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    // log(1 + e^-z) for y=1, log(1 + e^z) for y=0, computed stably.
    const double z = y[i] > 0.5 ? margin[i] : -margin[i];
    s += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return s / static_cast<double>(y.size());
}

nlohmann::json node_to_json(const DecisionTree& tree, int index) {
  const auto& n = tree.nodes[static_cast<std::size_t>(index)];
  if (n.feature < 0) return {{"leaf", n.value}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"value", n.value},
          {"left", node_to_json(tree, n.left)},
          {"right", node_to_json(tree, n.right)}};
}

int node_from_json(DecisionTree& tree, const nlohmann::json& j) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back({});
  if (j.contains("leaf")) {
    tree.nodes.back().value = j.at("leaf").get<double>();
    return index;
  }
  TreeNode node;
  node.feature = j.at("feature").get<int>();
  node.threshold = j.at("threshold").get<double>();
  node.value = j.at("value").get<double>();
  node.left = node_from_json(tree, j.at("left"));
  node.right = node_from_json(tree, j.at("right"));
  tree.nodes[static_cast<std::size_t>(index)] = node;
  return index;
}

}  // namespace

double DecisionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.feature >= 0) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return deepest;
}

DecisionTree fit_tree(const FeatureRows& x, std::span<const double> y, std::span<const std::size_t> sample,
                      const TreeParams& params, std::uint64_t seed) {
  check_training_input(x, y);
  if (sample.empty()) throw Error(ErrorKind::EmptyInput, "empty tree sample");
  TreeBuilder builder(x, y, params, seed);
  return builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
}

ForestModel train_random_forest(const FeatureRows& x, std::span<const double> y, const RandomForestParams& params,
                                std::vector<std::string> feature_names) {
  check_training_input(x, y);
  if (params.n_trees < 1) throw Error(ErrorKind::Config, "n_trees must be >= 1");
  if (params.max_depth < 0 || params.min_leaf < 1) throw Error(ErrorKind::Config, "invalid tree limits");
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();

  ForestModel model;
  model.kind = ForestKind::RandomForest;
  model.n_features = d;
  model.feature_names = std::move(feature_names);

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_leaf = params.min_leaf;
  tp.criterion = SplitCriterion::Gini;
  tp.features_per_split = params.feature_subsample > 0
                              ? params.feature_subsample
                              : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));

  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<std::size_t> sample(n);
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_seed = splitmix64(params.seed + static_cast<std::uint64_t>(t));
    Rng rng(tree_seed);
    for (auto& s : sample) s = rng.index(n);
    model.trees.push_back(fit_tree(x, y, sample, tp, splitmix64(tree_seed)));
  }
  return model;
}

ForestModel train_gbdt_ranker(const FeatureRows& x, std::span<const double> y, const GbdtParams& params,
                              std::vector<std::string> feature_names) {
  check_training_input(x, y);
  if (params.n_rounds < 0) throw Error(ErrorKind::Config, "n_rounds must be >= 0");
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw Error(ErrorKind::Config, "GBDT learning_rate must be in (0, 1]");
  }
  const std::size_t n = x.size();

  ForestModel model;
  model.kind = ForestKind::GBDT;
  model.learning_rate = params.learning_rate;
  model.n_features = x.front().size();
  model.feature_names = std::move(feature_names);

  double positives = 0.0;
  for (double v : y) positives += v;
  const double p = std::clamp(positives / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(p / (1.0 - p));

  std::vector<double> margin(n, model.base_score);
  std::vector<double> residual(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  model.train_log_loss.push_back(log_loss(y, margin));

  TreeParams tp;
  tp.max_depth = params.max_depth;
  tp.min_leaf = params.min_leaf;
  tp.criterion = SplitCriterion::Variance;

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - logistic(margin[i]);
    DecisionTree tree = fit_tree(x, residual, all, tp, splitmix64(params.seed + static_cast<std::uint64_t>(round)));
    for (std::size_t i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.predict(x[i]);
    model.trees.push_back(std::move(tree));
    model.train_log_loss.push_back(log_loss(y, margin));
  }
  return model;
}

double predict_forest(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error(ErrorKind::Shape, "model expects " + std::to_string(model.n_features) + " features, got " +
                                      std::to_string(x.size()));
  }
  if (model.kind == ForestKind::RandomForest) {
    if (model.trees.empty()) throw Error(ErrorKind::Contract, "random forest without trees");
    std::size_t votes = 0;
    for (const auto& t : model.trees) votes += t.predict(x) >= 0.5 ? 1 : 0;
    return static_cast<double>(votes) / static_cast<double>(model.trees.size());
  }
  double z = model.base_score;
  for (const auto& t : model.trees) z += model.learning_rate * t.predict(x);
  return logistic(z);
}

double csr_binary_target(const CsrLabel& label) { return label.days_to_first_error > 0 ? 1.0 : 0.0; }

std::vector<DiskScore> rank_by_score(std::vector<DiskScore> scores) {
  std::sort(scores.begin(), scores.end(), [](const DiskScore& a, const DiskScore& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scores;
}

std::vector<DiskScore> rank_disks(const ForestModel& model,
                                  const std::vector<std::pair<DiskId, std::vector<double>>>& x_per_disk) {
  std::vector<DiskScore> scores;
  scores.reserve(x_per_disk.size());
  for (const auto& [id, x] : x_per_disk) scores.emplace_back(id, predict_forest(model, x));
  return rank_by_score(std::move(scores));
}

nlohmann::json to_json(const ForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
  return {{"format", "failslow-forest"},
          {"version", 1},
          {"kind", model.kind == ForestKind::RandomForest ? "random_forest" : "gbdt"},
          {"learning_rate", model.learning_rate},
          {"base_score", model.base_score},
          {"n_features", model.n_features},
          {"feature_names", model.feature_names},
          {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "failslow-forest" || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Parse, "not a version-1 failslow-forest model");
  }
  ForestModel m;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "random_forest") {
    m.kind = ForestKind::RandomForest;
  } else if (kind == "gbdt") {
    m.kind = ForestKind::GBDT;
  } else {
    throw Error(ErrorKind::Parse, "unknown forest kind " + kind);
  }
  m.learning_rate = j.at("learning_rate").get<double>();
  m.base_score = j.at("base_score").get<double>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& t : j.at("trees")) {
    DecisionTree tree;
    node_from_json(tree, t);
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace failslow::classical
