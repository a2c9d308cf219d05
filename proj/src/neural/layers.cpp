#include "failslow/neural/layers.hpp"

#include <cmath>

namespace failslow::neural {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return Tensor(fan_in, fan_out, std::move(w), true);
}

Linear::Linear(ad::ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight_(params.add(name + ".weight", glorot(in, out, rng))),
      bias_(params.add(name + ".bias", Tensor::zeros(1, out, true))) {}

Tensor Linear::operator()(const Tensor& x) const { return ad::add(ad::matmul(x, weight_), bias_); }

LayerNorm::LayerNorm(ad::ParameterSet& params, const std::string& name, std::size_t width)
    : gain_(params.add(name + ".gain", Tensor::filled(1, width, 1.0, true))),
      bias_(params.add(name + ".bias", Tensor::zeros(1, width, true))) {}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return ad::add(ad::mul(ad::normalize_rows(x), gain_), bias_);
}

LstmCell::LstmCell(ad::ParameterSet& params, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng)
    : hidden_(hidden), weight_(params.add(name + ".weight", glorot(input + hidden, 4 * hidden, rng))) {
  // Forget-gate bias starts at 1 so early training keeps the cell state.
  std::vector<double> b(4 * hidden, 0.0);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;
  bias_ = params.add(name + ".bias", Tensor(1, 4 * hidden, std::move(b), true));
}

LstmState LstmCell::initial_state(std::size_t batch) const {
  return {Tensor::zeros(batch, hidden_), Tensor::zeros(batch, hidden_)};
}

LstmState LstmCell::operator()(const Tensor& x, const LstmState& state) const {
  const Tensor joined[] = {x, state.h};
  const Tensor gates = ad::add(ad::matmul(ad::concat_cols(joined), weight_), bias_);
  const std::size_t h = hidden_;
  const Tensor input_gate = ad::sigmoid(ad::slice_cols(gates, 0, h));
  const Tensor forget_gate = ad::sigmoid(ad::slice_cols(gates, h, h));
  const Tensor candidate = ad::tanh(ad::slice_cols(gates, 2 * h, h));
  const Tensor output_gate = ad::sigmoid(ad::slice_cols(gates, 3 * h, h));
  const Tensor c = forget_gate * state.c + input_gate * candidate;
  return {output_gate * ad::tanh(c), c};
}

MultiHeadAttention::MultiHeadAttention(ad::ParameterSet& params, const std::string& name, std::size_t width,
                                       std::size_t heads, Rng& rng)
    : width_(width), heads_(heads) {
  if (heads == 0 || width % heads != 0) {
    throw Error(ErrorKind::Config, "attention width " + std::to_string(width) + " not divisible by " +
                                       std::to_string(heads) + " heads");
  }
  query_ = Linear(params, name + ".query", width, width, rng);
  key_ = Linear(params, name + ".key", width, width, rng);
  value_ = Linear(params, name + ".value", width, width, rng);
  output_ = Linear(params, name + ".output", width, width, rng);
}

Tensor MultiHeadAttention::attention_weights(const Tensor& x, std::size_t tokens, std::size_t sequence,
                                             std::size_t head) const {
  const std::size_t dk = width_ / heads_;
  const Tensor xs = ad::slice_rows(x, sequence * tokens, tokens);
  const Tensor q = ad::slice_cols(query_(xs), head * dk, dk);
  const Tensor k = ad::slice_cols(key_(xs), head * dk, dk);
  return ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(dk))));
}

Tensor MultiHeadAttention::operator()(const Tensor& x, std::size_t tokens) const {
  if (tokens == 0 || x.rows() % tokens != 0) {
    throw Error(ErrorKind::Shape, "attention input " + x.shape_str() + " is not a stack of " + std::to_string(tokens) +
                                      "-token sequences");
  }
  const std::size_t sequences = x.rows() / tokens;
  const std::size_t dk = width_ / heads_;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  const Tensor q = query_(x), k = key_(x), v = value_(x);

  std::vector<Tensor> per_sequence;
  per_sequence.reserve(sequences);
  std::vector<Tensor> per_head(heads_);
  for (std::size_t s = 0; s < sequences; ++s) {
    const Tensor qs = ad::slice_rows(q, s * tokens, tokens);
    const Tensor ks = ad::slice_rows(k, s * tokens, tokens);
    const Tensor vs = ad::slice_rows(v, s * tokens, tokens);
    for (std::size_t h = 0; h < heads_; ++h) {
      const Tensor qh = ad::slice_cols(qs, h * dk, dk);
      const Tensor kh = ad::slice_cols(ks, h * dk, dk);
      const Tensor vh = ad::slice_cols(vs, h * dk, dk);
      const Tensor weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt_dk));
      per_head[h] = ad::matmul(weights, vh);
    }
    per_sequence.push_back(ad::concat_cols(per_head));
  }
  return output_(ad::concat_rows(per_sequence));
}

EncoderLayer::EncoderLayer(ad::ParameterSet& params, const std::string& name, std::size_t width, std::size_t heads,
                           std::size_t ff_width, Rng& rng)
    : attention_(params, name + ".attention", width, heads, rng),
      norm1_(params, name + ".norm1", width),
      norm2_(params, name + ".norm2", width),
      ff1_(params, name + ".ff1", width, ff_width, rng),
      ff2_(params, name + ".ff2", ff_width, width, rng) {}

Tensor EncoderLayer::operator()(const Tensor& x, std::size_t tokens) const {
  const Tensor attended = norm1_(ad::add(x, attention_(x, tokens)));
  return norm2_(ad::add(attended, ff2_(ad::relu(ff1_(attended)))));
}

}  // namespace failslow::neural
