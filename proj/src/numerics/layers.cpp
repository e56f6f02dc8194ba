#include "dspg/numerics/layers.hpp"

#include <cmath>

namespace dspg::numerics {

Tensor make_param(Shape shape, Rng& rng, double stddev) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(stddev * rng.normal());
  t.set_requires_grad(true);
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, double stddev, bool with_bias)
    : weight(make_param({in, out}, rng, stddev)) {
  if (with_bias) {
    bias = Tensor({out});
    bias.set_requires_grad(true);
  }
}

Var Linear::forward(Tape& tape, Var x) {
  Var y = matmul(x, tape.param(weight));
  if (!bias.empty()) y = add_bias(y, tape.param(bias));
  return y;
}

void Linear::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", &weight});
  if (!bias.empty()) out.push_back({prefix + ".bias", &bias});
}

void Linear::zero() {
  for (float& v : weight.data()) v = 0.0f;
  for (float& v : bias.data()) v = 0.0f;
}

LayerNorm::LayerNorm(std::size_t width) : gain({width}, 1.0f), bias({width}) {
  gain.set_requires_grad(true);
  bias.set_requires_grad(true);
}

Var LayerNorm::forward(Tape& tape, Var x) { return layer_norm(x, tape.param(gain), tape.param(bias)); }

void LayerNorm::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".gain", &gain});
  out.push_back({prefix + ".bias", &bias});
}

Mlp::Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng)
    : first(in, hidden, rng, std::sqrt(2.0 / static_cast<double>(in))),
      second(hidden, out, rng, std::sqrt(1.0 / static_cast<double>(hidden))) {}

Var Mlp::forward(Tape& tape, Var x) { return second.forward(tape, relu(first.forward(tape, x))); }

void Mlp::collect(const std::string& prefix, ParamList& out) {
  first.collect(prefix + ".0", out);
  second.collect(prefix + ".1", out);
}

void Mlp::zero() {
  first.zero();
  second.zero();
}

TransformerBlock::TransformerBlock(const TransformerConfig& cfg, Rng& rng)
    : heads_(cfg.heads),
      dropout_(cfg.dropout),
      ln_attn_(cfg.width),
      query_(cfg.width, cfg.width, rng, 0.02),
      key_(cfg.width, cfg.width, rng, 0.02),
      value_(cfg.width, cfg.width, rng, 0.02),
      out_(cfg.width, cfg.width, rng, 0.02 / std::sqrt(2.0 * static_cast<double>(cfg.layers))),
      ln_ffn_(cfg.width),
      ffn_in_(cfg.width, cfg.width * cfg.ffn_mult, rng, 0.02),
      ffn_out_(cfg.width * cfg.ffn_mult, cfg.width, rng, 0.02 / std::sqrt(2.0 * static_cast<double>(cfg.layers))) {}

Var TransformerBlock::forward(Tape& tape, Var x, const AttentionMask& mask, Rng* dropout_rng) {
  auto drop = [&](Var v) { return dropout_rng ? dropout(v, dropout_, *dropout_rng) : v; };
  Var h = ln_attn_.forward(tape, x);
  Var a = attention(query_.forward(tape, h), key_.forward(tape, h), value_.forward(tape, h), heads_, mask);
  x = add(x, drop(out_.forward(tape, a)));
  h = ln_ffn_.forward(tape, x);
  h = ffn_out_.forward(tape, gelu(ffn_in_.forward(tape, h)));
  return add(x, drop(h));
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) {
  ln_attn_.collect(prefix + ".ln_attn", out);
  query_.collect(prefix + ".attn.query", out);
  key_.collect(prefix + ".attn.key", out);
  value_.collect(prefix + ".attn.value", out);
  out_.collect(prefix + ".attn.out", out);
  ln_ffn_.collect(prefix + ".ln_ffn", out);
  ffn_in_.collect(prefix + ".ffn.in", out);
  ffn_out_.collect(prefix + ".ffn.out", out);
}

Transformer::Transformer(const TransformerConfig& cfg, Rng& rng) : width_(cfg.width), final_(cfg.width) {
  blocks_.reserve(cfg.layers);
  for (std::size_t i = 0; i < cfg.layers; ++i) blocks_.emplace_back(cfg, rng);
}

Var Transformer::forward(Tape& tape, Var x, const AttentionMask& mask, Rng* dropout_rng) {
  for (TransformerBlock& block : blocks_) x = block.forward(tape, x, mask, dropout_rng);
  return final_.forward(tape, x);
}

void Transformer::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
  final_.collect(prefix + ".ln_final", out);
}

Tensor sinusoidal_positions(std::size_t rows, std::size_t width) {
  Tensor table({rows, width});
  for (std::size_t p = 0; p < rows; ++p) {
    for (std::size_t i = 0; i < width; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
      const double angle = static_cast<double>(p) * freq;
      table.at(p, i) = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return table;
}

}  // namespace dspg::numerics
