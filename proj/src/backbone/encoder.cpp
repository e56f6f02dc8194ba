#include "dspg/backbone/encoder.hpp"

#include <cmath>

namespace dspg::backbone {

using numerics::Tape;
using numerics::Var;

BackboneEncoder::BackboneEncoder(const BackboneConfig& cfg, numerics::Rng& rng) : cfg_(cfg) {
  GvpDims dims{cfg.scalar_dim, cfg.vector_dim, cfg.scalar_dim, cfg.vector_dim, cfg.hidden_vectors};
  for (std::size_t i = 0; i < cfg.gvp_layers; ++i) gvp_.emplace_back(dims, rng);
  readout_ = numerics::Linear(cfg.scalar_dim + cfg.vector_dim, cfg.hidden, rng,
                              1.0 / std::sqrt(static_cast<double>(cfg.scalar_dim + cfg.vector_dim)));
  transformer_ = numerics::Transformer({cfg.hidden, cfg.heads, cfg.ffn_mult, cfg.layers, cfg.dropout}, rng);
}

Var BackboneEncoder::forward(Tape& tape, const ResidueGeometry& geom, numerics::Rng* dropout_rng) {
  Var s = tape.constant(geom.s);
  Var v = tape.constant(geom.v);
  for (GvpLayer& layer : gvp_) {
    auto out = layer.forward(tape, s, v);
    s = out.s;
    v = out.v;
  }
  Var h = readout_.forward(tape, numerics::concat_cols(s, numerics::vector_norms(v)));
  h = numerics::add(h, tape.constant(numerics::sinusoidal_positions(geom.length(), cfg_.hidden)));
  return transformer_.forward(tape, h, numerics::AttentionMask{}, dropout_rng);
}

numerics::Tensor BackboneEncoder::encode(const numerics::Tensor& coords) {
  ResidueGeometry geom = featurize_residues(coords, cfg_.scalar_dim, cfg_.vector_dim);
  Tape tape(numerics::Precision::f32, /*record=*/false);
  return tape.value(forward(tape, geom));
}

void BackboneEncoder::collect(const std::string& prefix, numerics::ParamList& out) {
  for (std::size_t i = 0; i < gvp_.size(); ++i) gvp_[i].collect(prefix + ".gvp" + std::to_string(i), out);
  readout_.collect(prefix + ".readout", out);
  transformer_.collect(prefix + ".transformer", out);
}

}  // namespace dspg::backbone
