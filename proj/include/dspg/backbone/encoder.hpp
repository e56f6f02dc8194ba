#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dspg/backbone/features.hpp"
#include "dspg/backbone/gvp.hpp"
#include "dspg/numerics/layers.hpp"

namespace dspg::backbone {

struct BackboneConfig {
  std::size_t scalar_dim = 128;   // d_s
  std::size_t vector_dim = 16;    // d_v
  std::size_t hidden_vectors = 16;
  std::size_t gvp_layers = 4;
  std::size_t hidden = 256;       // h_s
  std::size_t layers = 2;         // Transformer encoder depth
  std::size_t heads = 8;
  std::size_t ffn_mult = 4;
  double dropout = 0.0;
};

// featurize -> GVP stack -> [s ; |V| per channel] -> linear to h_s
// -> + sinusoidal positions -> bidirectional Transformer -> B [L, h_s].
// Only rotation-invariant quantities reach the read-out, so B is invariant
// to rigid motions of the input coordinates.
class BackboneEncoder {
 public:
  BackboneEncoder() = default;
  BackboneEncoder(const BackboneConfig& cfg, numerics::Rng& rng);

  numerics::Var forward(numerics::Tape& tape, const ResidueGeometry& geom, numerics::Rng* dropout_rng = nullptr);
  // Inference helper: coordinates [L,3,3] -> B [L, h_s].
  numerics::Tensor encode(const numerics::Tensor& coords);
  void collect(const std::string& prefix, numerics::ParamList& out);

  const BackboneConfig& config() const { return cfg_; }
  std::vector<GvpLayer>& gvp_layers() { return gvp_; }

 private:
  BackboneConfig cfg_;
  std::vector<GvpLayer> gvp_;
  numerics::Linear readout_;
  numerics::Transformer transformer_;
};

}  // namespace dspg::backbone
