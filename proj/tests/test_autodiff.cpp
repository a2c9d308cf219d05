#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "failslow/autodiff.hpp"
#include "gradcheck.hpp"

using namespace failslow;
using ad::Tensor;
using failslow::testing::gradcheck;
using failslow::testing::project;
using failslow::testing::random_tensor;

TEST(Tensor, ShapeAndAccess) {
  const auto t = Tensor::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_THROW(Tensor(2, 2, {1, 2, 3}), Error);
}

TEST(Ops, ForwardValues) {
  const auto a = Tensor::from_rows({{1, 2}, {3, 4}});
  const auto b = Tensor::from_rows({{5, 6}, {7, 8}});
  const auto m = ad::matmul(a, b);
  EXPECT_EQ(m.data(), (std::vector<double>{19, 22, 43, 50}));
  EXPECT_EQ(ad::add(a, Tensor::from_rows({{10, 20}})).data(), (std::vector<double>{11, 22, 13, 24}));
  EXPECT_EQ(ad::transpose(a).data(), (std::vector<double>{1, 3, 2, 4}));
  const auto s = ad::softmax_rows(Tensor::from_rows({{0, std::log(3.0)}}));
  EXPECT_NEAR(s.at(0, 0), 0.25, 1e-12);
  EXPECT_NEAR(s.at(0, 1), 0.75, 1e-12);
  EXPECT_NEAR(ad::mse_loss(a, b).item(), 16.0, 1e-12);
  const auto n = ad::normalize_rows(Tensor::from_rows({{1, 2, 3}}), 0.0);
  EXPECT_NEAR(n.at(0, 0), -std::sqrt(1.5), 1e-12);
}

TEST(Ops, ShapeMismatchThrows) {
  const auto a = Tensor::zeros(2, 3), b = Tensor::zeros(2, 3);
  EXPECT_THROW(ad::matmul(a, b), Error);
  EXPECT_THROW(ad::add(a, Tensor::zeros(3, 3)), Error);
  EXPECT_THROW(ad::slice_cols(a, 2, 2), Error);
}

TEST(Backward, SimpleChainRule) {
  // d/dx sum((x*w)^2) = 2 x w^2
  const auto x = Tensor::from_rows({{1.5, -2.0}}, true);
  const auto w = Tensor::from_rows({{3.0, 0.5}}, true);
  const auto y = ad::mul(x, w);
  ad::backward(ad::sum(ad::mul(y, y)));
  EXPECT_NEAR(x.grad()[0], 2 * 1.5 * 9.0, 1e-12);
  EXPECT_NEAR(x.grad()[1], 2 * -2.0 * 0.25, 1e-12);
  EXPECT_NEAR(w.grad()[0], 2 * 3.0 * 2.25, 1e-12);
}

TEST(Backward, GradientsAccumulateAcrossCalls) {
  const auto x = Tensor::from_rows({{2.0}}, true);
  ad::backward(ad::scale(x, 3.0));
  ad::backward(ad::scale(x, 3.0));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
  Tensor(x).zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(Backward, NoGradGuardRecordsNothing) {
  const auto x = Tensor::from_rows({{2.0}}, true);
  Tensor y;
  {
    ad::NoGradGuard guard;
    EXPECT_TRUE(ad::NoGradGuard::active());
    y = ad::scale(x, 3.0);
  }
  EXPECT_FALSE(ad::NoGradGuard::active());
  EXPECT_FALSE(y.requires_grad());
}

// Each op checked on its own so a failure names the op.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  Rng rng(100 + GetParam());
  const auto a = random_tensor(3, 4, rng), b = random_tensor(3, 4, rng), c = random_tensor(4, 2, rng);
  const auto row = random_tensor(1, 4, rng);
  const auto r34 = random_tensor(3, 4, rng, false), r32 = random_tensor(3, 2, rng, false);
  const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
      {"matmul", [&] { return project(ad::matmul(a, c), r32); }},
      {"add_broadcast", [&] { return project(ad::add(a, row), r34); }},
      {"sub_broadcast", [&] { return project(ad::sub(a, row), r34); }},
      {"mul", [&] { return project(ad::mul(a, b), r34); }},
      {"mul_broadcast", [&] { return project(ad::mul(a, row), r34); }},
      {"scale", [&] { return project(ad::scale(a, -1.7), r34); }},
      {"transpose", [&] { return project(ad::transpose(ad::matmul(a, c)), ad::transpose(r32)); }},
      {"tanh", [&] { return project(ad::tanh(a), r34); }},
      {"sigmoid", [&] { return project(ad::sigmoid(a), r34); }},
      {"softmax", [&] { return project(ad::softmax_rows(a), r34); }},
      {"normalize", [&] { return project(ad::normalize_rows(a), r34); }},
      {"concat_cols", [&] {
         const Tensor parts[] = {a, b};
         return ad::sum(ad::mul(ad::concat_cols(parts), ad::concat_cols(std::vector<Tensor>{r34, r34})));
       }},
      {"concat_rows", [&] {
         const Tensor parts[] = {a, b};
         return ad::sum(ad::mul(ad::concat_rows(parts), ad::concat_rows(std::vector<Tensor>{r34, r34})));
       }},
      {"slices", [&] { return project(ad::slice_rows(ad::slice_cols(a, 1, 2), 1, 2), ad::slice_rows(r32, 0, 2)); }},
      {"mean", [&] { return ad::mean(ad::mul(a, b)); }},
      {"mse", [&] { return ad::mse_loss(a, b); }},
  };
  for (const auto& [name, loss] : cases) {
    const auto r = gradcheck({a, b, c, row}, loss);
    EXPECT_LT(r.max_rel_error, 1e-5) << name;
  }
}

TEST_P(OpGradient, ReluAwayFromKink) {
  Rng rng(200 + GetParam());
  auto a = random_tensor(3, 4, rng);
  for (auto& v : a.mutable_data()) v += v > 0 ? 0.1 : -0.1;
  const auto r = random_tensor(3, 4, rng, false);
  EXPECT_LT(gradcheck({a}, [&] { return project(ad::relu(a), r); }).max_rel_error, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradient, ::testing::Range(0, 5));

TEST(Optimizer, RmspropMatchesHandComputedUpdate) {
  auto w = Tensor::from_rows({{1.0, -2.0}}, true);
  ad::OptimizerConfig cfg;
  cfg.kind = ad::OptimizerKind::RMSprop;
  cfg.learning_rate = 0.1;
  cfg.rho = 0.9;
  cfg.clip_norm.reset();
  ad::OptimizerState state;
  ad::backward(ad::sum(ad::mul(w, w)));  // grad = 2w = {2, -4}
  std::vector<Tensor> params{w};
  ad::optimizer_step(params, cfg, state);
  // v = 0.1 g^2; step = lr g / (sqrt(v) + eps) = lr * sign(g) / sqrt(0.1)
  const double step = 0.1 / (std::sqrt(0.1) + cfg.eps / 2.0);
  EXPECT_NEAR(w.data()[0], 1.0 - step, 1e-6);
  EXPECT_NEAR(w.data()[1], -2.0 + step, 1e-6);
}

TEST(Optimizer, AdamFirstStepIsLearningRateTimesSign) {
  auto w = Tensor::from_rows({{0.3, -5.0}}, true);
  ad::OptimizerConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.clip_norm.reset();
  ad::OptimizerState state;
  ad::backward(ad::sum(ad::mul(w, w)));
  std::vector<Tensor> params{w};
  ad::optimizer_step(params, cfg, state);
  EXPECT_NEAR(w.data()[0], 0.3 - 0.01, 1e-8);
  EXPECT_NEAR(w.data()[1], -5.0 + 0.01, 1e-8);
  EXPECT_EQ(state.steps, 1);
}

TEST(Optimizer, GlobalNormClipping) {
  std::vector<std::vector<double>> g = {{3.0}, {4.0}};
  EXPECT_DOUBLE_EQ(ad::clip_by_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0][0], 0.6, 1e-12);
  EXPECT_NEAR(g[1][0], 0.8, 1e-12);
  std::vector<std::vector<double>> small = {{0.3}};
  ad::clip_by_global_norm(small, 1.0);
  EXPECT_DOUBLE_EQ(small[0][0], 0.3);
}

TEST(Optimizer, NonFiniteGradientAborts) {
  auto w = Tensor::from_rows({{1.0}}, true);
  ad::backward(ad::scale(w, std::numeric_limits<double>::quiet_NaN()));
  ad::OptimizerState state;
  std::vector<Tensor> params{w};
  try {
    ad::optimizer_step(params, ad::OptimizerConfig{}, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
  }
  EXPECT_EQ(w.data()[0], 1.0);
}

TEST(Optimizer, InvalidConfig) {
  ad::OptimizerConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = ad::OptimizerConfig{};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(EarlyStop, PatienceCountsEpochsSinceBest) {
  const std::vector<double> h = {5, 4, 3, 3.5, 3.2, 3.1};
  EXPECT_FALSE(ad::early_stop(std::span(h).first(4), 3));
  EXPECT_FALSE(ad::early_stop(std::span(h).first(5), 3));
  EXPECT_TRUE(ad::early_stop(h, 3));
  // Ties keep the earliest best.
  const std::vector<double> flat = {1, 1, 1};
  EXPECT_TRUE(ad::early_stop(flat, 2));
  EXPECT_THROW(ad::early_stop(flat, 0), Error);
}

TEST(ParameterSet, CheckpointRoundTrip) {
  ad::ParameterSet a;
  a.add("w", Tensor::from_rows({{1.25, -3.0}, {0.1, 7.0}}, true));
  a.add("b", Tensor::from_rows({{0.5}}, true));
  EXPECT_EQ(a.scalar_count(), 5u);
  const auto j = a.to_json();
  EXPECT_EQ(j["format"], "failslow-params");
  EXPECT_EQ(j["version"], 1);

  ad::ParameterSet b;
  b.add("w", Tensor::zeros(2, 2, true));
  b.add("b", Tensor::zeros(1, 1, true));
  b.load_json(j);
  EXPECT_EQ(b.get("w").data(), a.get("w").data());
  EXPECT_EQ(b.get("b").data(), a.get("b").data());

  ad::ParameterSet wrong;
  wrong.add("w", Tensor::zeros(3, 2, true));
  wrong.add("b", Tensor::zeros(1, 1, true));
  EXPECT_THROW(wrong.load_json(j), Error);
  EXPECT_THROW(a.add("w", Tensor::zeros(1, 1)), Error);
}

TEST(Training, QuadraticConverges) {
  // Fit y = 2x - 1 by least squares with Adam.
  auto w = Tensor::from_rows({{0.0}}, true), b = Tensor::from_rows({{0.0}}, true);
  const auto x = Tensor::from_rows({{-1}, {0}, {1}, {2}});
  const auto y = Tensor::from_rows({{-3}, {-1}, {1}, {3}});
  ad::OptimizerConfig cfg;
  cfg.learning_rate = 0.05;
  ad::OptimizerState state;
  std::vector<Tensor> params{w, b};
  for (int i = 0; i < 2000; ++i) {
    for (auto& p : params) p.zero_grad();
    ad::backward(ad::mse_loss(ad::add(ad::matmul(x, w), b), y));
    ad::optimizer_step(params, cfg, state);
  }
  EXPECT_NEAR(w.data()[0], 2.0, 1e-3);
  EXPECT_NEAR(b.data()[0], -1.0, 1e-3);
}
