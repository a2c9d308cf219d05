#pragma once

// Central finite differences against reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "failslow/autodiff.hpp"
#include "failslow/rng.hpp"

namespace failslow::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Entries where both gradients are below `floor` in magnitude are compared
// on the absolute scale of `floor`.
inline GradCheck gradcheck(std::vector<ad::Tensor> inputs, const std::function<ad::Tensor()>& loss, double h = 1e-4,
                           double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  ad::backward(loss());
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) analytic.push_back(t.grad());

  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto& values = inputs[i].mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = loss().item();
      values[j] = saved - h;
      const double down = loss().item();
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i][j];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
  }
  return out;
}

inline ad::Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, bool requires_grad = true) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return ad::Tensor(rows, cols, std::move(v), requires_grad);
}

// sum(out * weights): a scalar whose gradient reaches every output entry.
inline ad::Tensor project(const ad::Tensor& out, const ad::Tensor& weights) { return ad::sum(ad::mul(out, weights)); }

}  // namespace failslow::testing
