#pragma once

// Building blocks for the sequence detectors, composed from autodiff ops.
// Every layer registers its weights in a ParameterSet under a name prefix.

#include <cstdint>
#include <string>
#include <vector>

#include "failslow/autodiff.hpp"
#include "failslow/rng.hpp"

namespace failslow::neural {

using ad::Tensor;

// Glorot-uniform weights.
Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ad::ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Tensor operator()(const Tensor& x) const;  // x: (n, in) -> (n, out)
  std::size_t in() const { return weight_.rows(); }
  std::size_t out() const { return weight_.cols(); }

 private:
  Tensor weight_;
  Tensor bias_;
};

// Affine layer normalization over the last dimension.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ad::ParameterSet& params, const std::string& name, std::size_t width);

  Tensor operator()(const Tensor& x) const;

 private:
  Tensor gain_;
  Tensor bias_;
};

struct LstmState {
  Tensor h;  // (batch, hidden)
  Tensor c;  // (batch, hidden)
};

// Standard LSTM cell: sigmoid input/forget/output gates, tanh candidate and
// output activation. One fused weight matrix [x, h] -> [i, f, g, o].
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ad::ParameterSet& params, const std::string& name, std::size_t input, std::size_t hidden, Rng& rng);

  LstmState operator()(const Tensor& x, const LstmState& state) const;
  LstmState initial_state(std::size_t batch) const;
  std::size_t hidden() const { return hidden_; }

 private:
  std::size_t hidden_ = 0;
  Tensor weight_;  // (input + hidden, 4 * hidden)
  Tensor bias_;    // (1, 4 * hidden)
};

// Multi-head scaled dot-product self-attention over one sequence of tokens.
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ad::ParameterSet& params, const std::string& name, std::size_t width, std::size_t heads,
                     Rng& rng);

  // x: (batch * tokens, width), sequences stacked row-wise.
  Tensor operator()(const Tensor& x, std::size_t tokens) const;

  // Attention weights of one sequence/head, for inspection: (tokens, tokens).
  Tensor attention_weights(const Tensor& x, std::size_t tokens, std::size_t sequence, std::size_t head) const;

 private:
  std::size_t width_ = 0;
  std::size_t heads_ = 0;
  Linear query_, key_, value_, output_;
};

// Post-norm transformer encoder layer: LN(x + MHA(x)), then LN(x + FFN(x)).
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(ad::ParameterSet& params, const std::string& name, std::size_t width, std::size_t heads,
               std::size_t ff_width, Rng& rng);

  Tensor operator()(const Tensor& x, std::size_t tokens) const;

 private:
  MultiHeadAttention attention_;
  LayerNorm norm1_, norm2_;
  Linear ff1_, ff2_;
};

}  // namespace failslow::neural
