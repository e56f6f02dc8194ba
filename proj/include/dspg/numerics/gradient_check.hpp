#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dspg/numerics/tape.hpp"

namespace dspg::numerics {

struct GradientCheckOptions {
  double step = 1e-3;
  std::size_t max_coordinates = 64;
  std::uint64_t seed = 0;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

// Builds a scalar on the supplied tape; parameters must be bound through
// tape.param(). Called once on a float32 tape for the reverse-mode gradient
// and repeatedly on float64 tapes for central differences.
using ScalarFunction = std::function<Var(Tape&)>;

// Compares the float32 autodiff gradient with central differences on up to
// max_coordinates randomly chosen parameter entries. The relative error uses
// the denominator max(|g|, 1e-8) where g is the autodiff gradient.
// Throws EvaluationError when f is non-finite at any evaluation.
GradientCheckResult gradient_check(const ScalarFunction& f, const std::vector<Tensor*>& params,
                                   const GradientCheckOptions& options = {});

}  // namespace dspg::numerics
