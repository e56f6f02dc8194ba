#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dspg/numerics/ops.hpp"
#include "dspg/numerics/random.hpp"
#include "dspg/numerics/tensor.hpp"

namespace dspg::numerics {

struct NamedParam {
  std::string name;
  Tensor* tensor;
};
using ParamList = std::vector<NamedParam>;

// Trainable tensor with requires_grad set, filled with N(0, stddev).
Tensor make_param(Shape shape, Rng& rng, double stddev);

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, double stddev, bool with_bias = true);

  Var forward(Tape& tape, Var x);
  void collect(const std::string& prefix, ParamList& out);
  void zero();

  std::size_t in_features() const { return weight.shape().empty() ? 0 : weight.dim(0); }
  std::size_t out_features() const { return weight.shape().empty() ? 0 : weight.dim(1); }

  Tensor weight;  // [in, out]
  Tensor bias;    // [out], empty when constructed without bias
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t width);

  Var forward(Tape& tape, Var x);
  void collect(const std::string& prefix, ParamList& out);

  Tensor gain;
  Tensor bias;
};

// Two-layer perceptron in -> hidden -> out with ReLU between.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  Var forward(Tape& tape, Var x);
  void collect(const std::string& prefix, ParamList& out);
  void zero();

  Linear first;
  Linear second;
};

struct TransformerConfig {
  std::size_t width = 256;
  std::size_t heads = 8;
  std::size_t ffn_mult = 4;
  std::size_t layers = 2;
  double dropout = 0.0;
};

// Pre-norm block: x + Attn(LN(x)), then x + FFN(LN(x)) with GELU.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const TransformerConfig& cfg, Rng& rng);

  Var forward(Tape& tape, Var x, const AttentionMask& mask, Rng* dropout_rng);
  void collect(const std::string& prefix, ParamList& out);

 private:
  std::size_t heads_ = 1;
  double dropout_ = 0.0;
  LayerNorm ln_attn_;
  Linear query_, key_, value_, out_;
  LayerNorm ln_ffn_;
  Linear ffn_in_, ffn_out_;
};

// Stack of blocks followed by a final LayerNorm.
class Transformer {
 public:
  Transformer() = default;
  Transformer(const TransformerConfig& cfg, Rng& rng);

  Var forward(Tape& tape, Var x, const AttentionMask& mask, Rng* dropout_rng = nullptr);
  void collect(const std::string& prefix, ParamList& out);
  std::size_t width() const { return width_; }

 private:
  std::size_t width_ = 0;
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_;
};

// Fixed sinusoidal position table [rows, width].
Tensor sinusoidal_positions(std::size_t rows, std::size_t width);

}  // namespace dspg::numerics
