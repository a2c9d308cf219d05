#include "failslow/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/Dense>

namespace failslow::ad {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

MapC view(const Node& n) { return MapC(n.value.data(), static_cast<Eigen::Index>(n.rows), static_cast<Eigen::Index>(n.cols)); }
MapC view(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return MapC(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
Map grad_view(Node& n) {
  auto& g = n.grad_buffer();
  return Map(g.data(), static_cast<Eigen::Index>(n.rows), static_cast<Eigen::Index>(n.cols));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw Error(ErrorKind::Shape, std::string(op) + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw Error(ErrorKind::Contract, std::string(op) + ": undefined tensor");
}

enum class Broadcast { None, Row };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::None;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  shape_error(op, a, b);
}

// Accumulates g (shaped like the result) into a parent that was row-broadcast.
void accumulate_broadcast(Node& parent, const std::vector<double>& g, std::size_t rows, std::size_t cols,
                          Broadcast kind, double sign = 1.0) {
  if (!parent.requires_grad) return;
  auto& pg = parent.grad_buffer();
  if (kind == Broadcast::None) {
    for (std::size_t i = 0; i < g.size(); ++i) pg[i] += sign * g[i];
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) pg[c] += sign * g[r * cols + c];
    }
  }
}

template <typename Fn, typename Dfn>
Tensor elementwise(const Tensor& a, Fn fn, Dfn dfn_from_output) {
  require_defined(a, "elementwise");
  std::vector<double> out(a.size());
  const auto& x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(x[i]);
  return make_result(a.rows(), a.cols(), std::move(out), {a}, [dfn_from_output](Node& self) {
    Node& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& pg = p.grad_buffer();
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += self.grad[i] * dfn_from_output(self.value[i], p.value[i]);
  });
}

thread_local bool g_no_grad = false;

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols) {
    throw Error(ErrorKind::Shape, "tensor data has " + std::to_string(data.size()) + " values for shape (" +
                                      std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  node_ = std::make_shared<Node>();
  node_->rows = rows;
  node_->cols = cols;
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  return Tensor(rows, cols, std::vector<double>(rows * cols, v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) { return Tensor(1, 1, {v}, requires_grad); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorKind::Shape, "ragged rows in from_rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(data), requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw Error(ErrorKind::Contract, "item() on non-scalar tensor " + shape_str());
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return Tensor(rows(), cols(), data(), false); }

std::string Tensor::shape_str() const {
  if (!node_) return "(undefined)";
  return "(" + std::to_string(node_->rows) + ", " + std::to_string(node_->cols) + ")";
}

Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->rows = rows;
  node->cols = cols;
  node->value = std::move(value);
  const bool needs = !g_no_grad && std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  std::vector<double> out(a.rows() * b.cols());
  Map(out.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(b.cols())).noalias() =
      view(*a.node()) * view(*b.node());
  return make_result(a.rows(), b.cols(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto g = view(self.grad, self.rows, self.cols);
    if (pa.requires_grad) grad_view(pa).noalias() += g * view(pb).transpose();
    if (pb.requires_grad) grad_view(pb).noalias() += view(pa).transpose() * g;
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind("add", a, b);
  std::vector<double> out = a.data();
  const auto& y = b.data();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += kind == Broadcast::None ? y[i] : y[i % cols];
  return make_result(a.rows(), cols, std::move(out), {a, b}, [kind](Node& self) {
    accumulate_broadcast(*self.parents[0], self.grad, self.rows, self.cols, Broadcast::None);
    accumulate_broadcast(*self.parents[1], self.grad, self.rows, self.cols, kind);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind("sub", a, b);
  std::vector<double> out = a.data();
  const auto& y = b.data();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= kind == Broadcast::None ? y[i] : y[i % cols];
  return make_result(a.rows(), cols, std::move(out), {a, b}, [kind](Node& self) {
    accumulate_broadcast(*self.parents[0], self.grad, self.rows, self.cols, Broadcast::None);
    accumulate_broadcast(*self.parents[1], self.grad, self.rows, self.cols, kind, -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind("mul", a, b);
  std::vector<double> out = a.data();
  const auto& y = b.data();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= kind == Broadcast::None ? y[i] : y[i % cols];
  return make_result(a.rows(), cols, std::move(out), {a, b}, [kind](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const std::size_t n = self.grad.size();
    const std::size_t c = self.cols;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * (kind == Broadcast::None ? pb.value[i] : pb.value[i % c]);
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) gb[kind == Broadcast::None ? i : i % c] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  require_defined(a, "scale");
  std::vector<double> out = a.data();
  for (auto& v : out) v *= s;
  return make_result(a.rows(), a.cols(), std::move(out), {a}, [s](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  require_defined(a, "transpose");
  std::vector<double> out(a.size());
  Map(out.data(), static_cast<Eigen::Index>(a.cols()), static_cast<Eigen::Index>(a.rows())) = view(*a.node()).transpose();
  return make_result(a.cols(), a.rows(), std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    grad_view(p) += view(self.grad, self.rows, self.cols).transpose();
  });
}

Tensor tanh(const Tensor& a) {
  return elementwise(a, [](double x) { return std::tanh(x); }, [](double y, double) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return elementwise(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return elementwise(a, [](double x) { return x > 0 ? x : 0.0; }, [](double, double x) { return x > 0 ? 1.0 : 0.0; });
}

Tensor softmax_rows(const Tensor& a) {
  require_defined(a, "softmax_rows");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  const auto& x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  return make_result(rows, cols, std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < self.rows; ++r) {
      const double* y = self.value.data() + r * self.cols;
      const double* gy = self.grad.data() + r * self.cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < self.cols; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < self.cols; ++c) g[r * self.cols + c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor normalize_rows(const Tensor& a, double eps) {
  require_defined(a, "normalize_rows");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  std::vector<double> inv_std(rows);
  const auto& x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += in[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = (in[c] - mu) * inv_std[r];
  }
  return make_result(rows, cols, std::move(out), {a}, [inv_std = std::move(inv_std)](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    const double n = static_cast<double>(self.cols);
    for (std::size_t r = 0; r < self.rows; ++r) {
      const double* y = self.value.data() + r * self.cols;
      const double* gy = self.grad.data() + r * self.cols;
      double sum_g = 0.0, sum_gy = 0.0;
      for (std::size_t c = 0; c < self.cols; ++c) {
        sum_g += gy[c];
        sum_gy += gy[c] * y[c];
      }
      for (std::size_t c = 0; c < self.cols; ++c) {
        g[r * self.cols + c] += inv_std[r] * (gy[c] - sum_g / n - y[c] * sum_gy / n);
      }
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorKind::Contract, "concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_cols");
    if (p.rows() != rows) shape_error("concat_cols", parts[0], p);
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.data().data() + r * p.cols(), p.cols(), out.data() + r * cols + offset);
    }
    offset += p.cols();
  }
  return make_result(rows, cols, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()), [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t r = 0; r < self.rows; ++r) {
          for (std::size_t c = 0; c < p.cols; ++c) g[r * p.cols + c] += self.grad[r * self.cols + off + c];
        }
      }
      off += p.cols;
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorKind::Contract, "concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_defined(p, "concat_rows");
    if (p.cols() != cols) shape_error("concat_rows", parts[0], p);
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result(rows, cols, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()), [](Node& self) {
    std::size_t off = 0;
    for (auto& pp : self.parents) {
      Node& p = *pp;
      if (p.requires_grad) {
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += p.value.size();
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_defined(a, "slice_cols");
  if (begin + count > a.cols()) {
    throw Error(ErrorKind::Shape, "slice_cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                      ") out of range for " + a.shape_str());
  }
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(a.data().data() + r * cols + begin, count, out.data() + r * count);
  return make_result(rows, count, std::move(out), {a}, [begin](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t r = 0; r < self.rows; ++r) {
      for (std::size_t c = 0; c < self.cols; ++c) g[r * p.cols + begin + c] += self.grad[r * self.cols + c];
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_defined(a, "slice_rows");
  if (begin + count > a.rows()) {
    throw Error(ErrorKind::Shape, "slice_rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                      ") out of range for " + a.shape_str());
  }
  const std::size_t cols = a.cols();
  std::vector<double> out(a.data().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          a.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  return make_result(count, cols, std::move(out), {a}, [begin](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    const std::size_t off = begin * p.cols;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[off + i] += self.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_result(1, 1, {s}, {a}, [](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  require_defined(a, "mean");
  if (a.size() == 0) throw Error(ErrorKind::EmptyInput, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_defined(pred, "mse_loss");
  require_defined(target, "mse_loss");
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) shape_error("mse_loss", pred, target);
  if (pred.size() == 0) throw Error(ErrorKind::EmptyInput, "mse_loss of empty tensors");
  const double n = static_cast<double>(pred.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    s += d * d;
  }
  return make_result(1, 1, {s / n}, {pred, target}, [n](Node& self) {
    Node& p = *self.parents[0];
    Node& t = *self.parents[1];
    const double k = 2.0 * self.grad[0] / n;
    if (p.requires_grad) {
      auto& g = p.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * (p.value[i] - t.value[i]);
    }
    if (t.requires_grad) {
      auto& g = t.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= k * (p.value[i] - t.value[i]);
    }
  });
}

void backward(const Tensor& loss) {
  require_defined(loss, "backward");
  if (loss.size() != 1) throw Error(ErrorKind::Contract, "backward needs a scalar loss, got " + loss.shape_str());
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Node& root = *loss.node();
  root.grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& n = **it;
    if (n.backward_fn && !n.grad.empty()) n.backward_fn(n);
  }
  // Release the graph: interior nodes drop their parents and closures.
  for (Node* n : order) {
    if (n->backward_fn) {
      n->parents.clear();
      n->backward_fn = nullptr;
    }
  }
}

// ---------------------------------------------------------------------------

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0)) throw Error(ErrorKind::Config, "learning_rate must be > 0");
  auto unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!unit(rho) || !unit(beta1) || !unit(beta2)) throw Error(ErrorKind::Config, "decay/beta parameters must be in (0, 1)");
  if (!(eps > 0)) throw Error(ErrorKind::Config, "eps must be > 0");
  if (clip_norm && !(*clip_norm > 0)) throw Error(ErrorKind::Config, "clip_norm must be > 0");
  if (early_stop_patience && *early_stop_patience < 1) throw Error(ErrorKind::Config, "patience must be >= 1");
}

double clip_by_global_norm(std::span<std::vector<double>> grads, double max_norm) {
  double ss = 0.0;
  for (const auto& g : grads)
    for (double v : g) ss += v * v;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double k = max_norm / norm;
    for (auto& g : grads)
      for (double& v : g) v *= k;
  }
  return norm;
}

void optimizer_step(std::span<Tensor> params, const OptimizerConfig& config, OptimizerState& state) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    grads.push_back(p.grad());
    for (double v : grads.back()) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NumericFailure, "non-finite gradient; aborting update");
    }
  }
  if (config.clip_norm) clip_by_global_norm(grads, *config.clip_norm);

  if (state.second.size() != params.size()) {
    state.first.assign(params.size(), {});
    state.second.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first[i].assign(params[i].size(), 0.0);
      state.second[i].assign(params[i].size(), 0.0);
    }
    state.steps = 0;
  }
  ++state.steps;
  const double lr = config.learning_rate;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.steps));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.steps));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].mutable_data();
    const auto& g = grads[i];
    auto& m = state.first[i];
    auto& v = state.second[i];
    if (w.size() != g.size() || m.size() != w.size()) throw Error(ErrorKind::Shape, "optimizer state shape mismatch");
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (config.kind == OptimizerKind::RMSprop) {
        v[j] = config.rho * v[j] + (1.0 - config.rho) * g[j] * g[j];
        w[j] -= lr * g[j] / (std::sqrt(v[j]) + config.eps);
      } else {
        m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
        v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
        w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.eps);
      }
    }
  }
}

bool early_stop(std::span<const double> history, int patience) {
  if (patience < 1) throw Error(ErrorKind::Config, "patience must be >= 1");
  if (history.empty()) return false;
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] < history[best]) best = i;
  }
  return history.size() - 1 - best >= static_cast<std::size_t>(patience);
}

// ---------------------------------------------------------------------------

Tensor ParameterSet::add(std::string name, Tensor t) {
  if (std::find(names_.begin(), names_.end(), name) != names_.end()) {
    throw Error(ErrorKind::Contract, "duplicate parameter name " + name);
  }
  names_.push_back(std::move(name));
  tensors_.push_back(t);
  return t;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return tensors_[i];
  }
  throw Error(ErrorKind::Contract, "unknown parameter " + name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t i = 0; i < names_.size(); ++i) {
    params[names_[i]] = {{"rows", tensors_[i].rows()}, {"cols", tensors_[i].cols()}, {"data", tensors_[i].data()}};
  }
  return {{"format", "failslow-params"}, {"version", 1}, {"params", std::move(params)}};
}

void ParameterSet::load_json(const nlohmann::json& j) {
  if (j.value("format", "") != "failslow-params" || j.value("version", 0) != 1) {
    throw Error(ErrorKind::Parse, "not a version-1 failslow-params checkpoint");
  }
  const auto& params = j.at("params");
  if (params.size() != names_.size()) throw Error(ErrorKind::Parse, "checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!params.contains(names_[i])) throw Error(ErrorKind::Parse, "checkpoint lacks parameter " + names_[i]);
    const auto& p = params.at(names_[i]);
    auto& t = tensors_[i];
    if (p.at("rows").get<std::size_t>() != t.rows() || p.at("cols").get<std::size_t>() != t.cols()) {
      throw Error(ErrorKind::Shape, "checkpoint shape mismatch for " + names_[i]);
    }
    auto data = p.at("data").get<std::vector<double>>();
    if (data.size() != t.size()) throw Error(ErrorKind::Shape, "checkpoint data size mismatch for " + names_[i]);
    t.mutable_data() = std::move(data);
  }
}

}  // namespace failslow::ad
