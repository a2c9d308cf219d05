#include "failslow/classical/iforest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "failslow/rng.hpp"

namespace failslow::classical {
namespace {

class ITreeBuilder {
 public:
  ITreeBuilder(const FeatureRows& x, int depth_limit, Rng& rng) : x_(x), limit_(depth_limit), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes.back().size = rows.size();
    if (depth >= limit_ || rows.size() <= 1) return index;

    const std::size_t d = x_.front().size();
    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> range(d);
    for (std::size_t f = 0; f < d; ++f) {
      double lo = x_[rows[0]][f], hi = lo;
      for (auto r : rows) {
        lo = std::min(lo, x_[r][f]);
        hi = std::max(hi, x_[r][f]);
      }
      range[f] = {lo, hi};
      if (hi > lo) splittable.push_back(f);
    }
    if (splittable.empty()) return index;

    const std::size_t f = splittable[rng_.index(splittable.size())];
    const auto [lo, hi] = range[f];
    double split = rng_.uniform(lo, hi);
    if (split <= lo) split = 0.5 * (lo + hi);

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][f] < split ? left : right).push_back(r);
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(f);
    node.split = split;
    node.left = l;
    node.right = r;
    return index;
  }

  const FeatureRows& x_;
  int limit_;
  Rng& rng_;
  IsolationTree tree_;
};

}  // namespace

double path_length_normalizer(std::size_t n) {
  if (n <= 1) return 0.0;
  const double m = static_cast<double>(n);
  const double harmonic = std::log(m - 1.0) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

double iforest_score_from_path(double mean_path, std::size_t subsample) {
  const double c = path_length_normalizer(subsample);
  if (c <= 0.0) throw Error(ErrorKind::Contract, "path normalizer undefined for subsample < 2");
  return std::exp2(-mean_path / c);
}

double IsolationTree::path_length(std::span<const double> x) const {
  std::size_t i = 0;
  double edges = 0.0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right);
    edges += 1.0;
  }
  return edges + path_length_normalizer(nodes[i].size);
}

int IsolationTree::depth() const {
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

int IsolationTree::split_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const ITreeNode& n) { return n.feature >= 0; }));
}

int IForestModel::depth_limit() const {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(subsample, 1)))));
}

IForestModel train_isolation_forest(const FeatureRows& x, const IForestParams& params) {
  if (x.empty()) throw Error(ErrorKind::EmptyInput, "isolation forest needs training rows");
  if (x.size() < 2) throw Error(ErrorKind::EmptyInput, "isolation forest needs at least 2 rows");
  if (params.n_trees < 1 || params.subsample < 2) throw Error(ErrorKind::Config, "n_trees >= 1 and subsample >= 2 required");
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d || d == 0) throw Error(ErrorKind::Shape, "ragged or empty feature rows");
  }

  IForestModel model;
  model.subsample = std::min(params.subsample, x.size());
  model.n_features = d;
  const int limit = model.depth_limit();

  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), 0);
  model.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(splitmix64(params.seed + static_cast<std::uint64_t>(t)));
    // Uniform subsample without replacement.
    std::vector<std::size_t> pool = all;
    for (std::size_t i = 0; i < model.subsample; ++i) std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
    pool.resize(model.subsample);
    ITreeBuilder builder(x, limit, rng);
    model.trees.push_back(builder.build(std::move(pool)));
  }
  return model;
}

double mean_path_length(const IForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error(ErrorKind::Shape, "isolation forest expects " + std::to_string(model.n_features) + " features");
  }
  double total = 0.0;
  for (const auto& t : model.trees) total += t.path_length(x);
  return total / static_cast<double>(model.trees.size());
}

double iforest_score(const IForestModel& model, std::span<const double> x) {
  return iforest_score_from_path(mean_path_length(model, x), model.subsample);
}

nlohmann::json to_json(const IForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
    trees.push_back(std::move(nodes));
  }
  return {{"format", "failslow-iforest"},
          {"version", 1},
          {"subsample", model.subsample},
          {"n_features", model.n_features},
          {"node_fields", {"feature", "split", "left", "right", "size"}},
          {"trees", std::move(trees)}};
}

IForestModel iforest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "failslow-iforest" || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Parse, "not a version-1 failslow-iforest model");
  }
  IForestModel m;
  m.subsample = j.at("subsample").get<std::size_t>();
  m.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& t : j.at("trees")) {
    IsolationTree tree;
    for (const auto& n : t) {
      tree.nodes.push_back(ITreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                     n.at(3).get<int>(), n.at(4).get<std::size_t>()});
    }
    m.trees.push_back(std::move(tree));
  }
  return m;
}

}  // namespace failslow::classical
