#include "dspg/backbone/gvp.hpp"

#include <cmath>

namespace dspg::backbone {

using numerics::Tape;
using numerics::Var;

GvpLayer::GvpLayer(const GvpDims& d, numerics::Rng& rng)
    : w_h(numerics::make_param({d.vector_in, d.hidden_vectors}, rng, 1.0 / std::sqrt(static_cast<double>(d.vector_in)))),
      w_mu(numerics::make_param({d.hidden_vectors, d.vector_out}, rng,
                                1.0 / std::sqrt(static_cast<double>(d.hidden_vectors)))),
      w_m(numerics::make_param({d.scalar_in + d.hidden_vectors, d.scalar_out}, rng,
                               std::sqrt(2.0 / static_cast<double>(d.scalar_in + d.hidden_vectors)))),
      b({d.scalar_out}) {
  b.set_requires_grad(true);
}

GvpLayer::Output GvpLayer::forward(Tape& tape, Var s, Var v) {
  Var v_h = numerics::matmul(v, tape.param(w_h));
  Var v_mu = numerics::matmul(v_h, tape.param(w_mu));
  Var s_h = numerics::vector_norms(v_h);
  Var gate = numerics::sigmoid(numerics::vector_norms(v_mu));
  Var s_out = numerics::relu(numerics::add_bias(numerics::matmul(numerics::concat_cols(s, s_h), tape.param(w_m)),
                                                tape.param(b)));
  return {s_out, numerics::gate_vectors(v_mu, gate)};
}

void GvpLayer::collect(const std::string& prefix, numerics::ParamList& out) {
  out.push_back({prefix + ".w_h", &w_h});
  out.push_back({prefix + ".w_mu", &w_mu});
  out.push_back({prefix + ".w_m", &w_m});
  out.push_back({prefix + ".b", &b});
}

ResidueGeometry gvp_forward(const ResidueGeometry& geom, GvpLayer& layer) {
  Tape tape(numerics::Precision::f32, /*record=*/false);
  auto out = layer.forward(tape, tape.constant(geom.s), tape.constant(geom.v));
  return ResidueGeometry{tape.value(out.s), tape.value(out.v)};
}

}  // namespace dspg::backbone
