#pragma once

#include <cstddef>
#include <string>

#include "dspg/backbone/features.hpp"
#include "dspg/numerics/layers.hpp"

namespace dspg::backbone {

struct GvpDims {
  std::size_t scalar_in = 128;
  std::size_t vector_in = 16;
  std::size_t scalar_out = 128;
  std::size_t vector_out = 16;
  std::size_t hidden_vectors = 16;  // h_v
};

// Geometric vector perceptron layer:
//   V_h = W_h V,  V_mu = W_mu V_h,  s_h = |V_h|,  v_mu = |V_mu|
//   s' = relu(W_m [s; s_h] + b),  V' = sigmoid(v_mu) * V_mu
// W_h and W_mu act on the channel axis only, so V' rotates with V and s' is
// rotation invariant.
class GvpLayer {
 public:
  GvpLayer() = default;
  GvpLayer(const GvpDims& dims, numerics::Rng& rng);

  struct Output {
    numerics::Var s;
    numerics::Var v;
  };
  Output forward(numerics::Tape& tape, numerics::Var s, numerics::Var v);
  void collect(const std::string& prefix, numerics::ParamList& out);

  numerics::Tensor w_h;   // [vector_in, hidden_vectors]
  numerics::Tensor w_mu;  // [hidden_vectors, vector_out]
  numerics::Tensor w_m;   // [scalar_in + hidden_vectors, scalar_out]
  numerics::Tensor b;     // [scalar_out]
};

// Forward-only convenience over concrete features.
ResidueGeometry gvp_forward(const ResidueGeometry& geom, GvpLayer& layer);

}  // namespace dspg::backbone
