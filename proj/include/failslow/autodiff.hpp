#pragma once

// Define-by-run reverse-mode automatic differentiation over dense row-major
// matrices of doubles. Every op records its inputs and a backward closure
// only when at least one input requires a gradient, so inference without
// parameters in the graph costs no bookkeeping.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "failslow/error.hpp"

namespace failslow::ad {

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient flows in
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  // Row-major initializer, e.g. from_rows({{1, 2}, {3, 4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& data() const { return node_->value; }
  std::vector<double>& mutable_data() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double item() const;

  // Gradient after backward(); zeros when no gradient reached this tensor.
  std::vector<double> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  // Same storage, cut from the graph.
  Tensor detach() const;

  std::string shape_str() const;
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(std::size_t, std::size_t, std::vector<double>,
                            std::vector<Tensor>, std::function<void(Node&)>);
  std::shared_ptr<Node> node_;
};

// Internal constructor used by the ops: records parents and the backward
// closure only when some parent requires a gradient.
Tensor make_result(std::size_t rows, std::size_t cols, std::vector<double> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward_fn);

Tensor matmul(const Tensor& a, const Tensor& b);
// Same shape, or b is a 1 x cols row broadcast across a's rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor transpose(const Tensor& a);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// Zero-mean, unit-variance per row (no affine part).
Tensor normalize_rows(const Tensor& a, double eps = 1e-5);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// mean((pred - target)^2) over all elements.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

// While alive on the current thread, ops record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool active();

 private:
  bool previous_;
};

// Populates grads of every requires_grad tensor reachable from loss, then
// releases the intermediate graph. Gradients accumulate into leaves.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Optimizers

enum class OptimizerKind { RMSprop, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double rho = 0.9;  // RMSprop decay
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::optional<double> clip_norm = 5.0;
  std::optional<int> early_stop_patience = 5;

  void validate() const;
};

struct OptimizerState {
  std::vector<std::vector<double>> first;   // Adam m
  std::vector<std::vector<double>> second;  // Adam v / RMSprop running square
  long steps = 0;
};

// Rescales grads in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_by_global_norm(std::span<std::vector<double>> grads, double max_norm);

// One update of params from their current grads. Throws
// Error{NumericFailure} when any grad is NaN/Inf, leaving params untouched.
void optimizer_step(std::span<Tensor> params, const OptimizerConfig& config, OptimizerState& state);

// True iff the best (lowest) loss is at least `patience` epochs old.
bool early_stop(std::span<const double> history, int patience);

// ---------------------------------------------------------------------------
// Named parameter collections and the checkpoint format.
//
// Checkpoint JSON:
//   {"format": "failslow-params", "version": 1,
//    "params": {"<name>": {"rows": R, "cols": C, "data": [row-major reals]}}}

class ParameterSet {
 public:
  Tensor add(std::string name, Tensor t);
  const Tensor& get(const std::string& name) const;
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t scalar_count() const;
  void zero_grad();

  nlohmann::json to_json() const;
  // Overwrites values of existing parameters; names and shapes must match.
  void load_json(const nlohmann::json& j);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

}  // namespace failslow::ad
