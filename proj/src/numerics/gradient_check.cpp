#include "dspg/numerics/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dspg/error.hpp"
#include "dspg/numerics/random.hpp"

namespace dspg::numerics {

namespace {

double evaluate(const ScalarFunction& f, Precision precision) {
  Tape tape(precision, /*record=*/false);
  Var out = f(tape);
  const double v = tape.item(out);
  if (!std::isfinite(v)) throw EvaluationError("gradient_check: function is not finite");
  return v;
}

}  // namespace

GradientCheckResult gradient_check(const ScalarFunction& f, const std::vector<Tensor*>& params,
                                   const GradientCheckOptions& options) {
  std::vector<bool> saved_flags;
  for (Tensor* p : params) {
    saved_flags.push_back(p->requires_grad());
    p->set_requires_grad(true);
    p->clear_grad();
  }

  {
    Tape tape(Precision::f32);
    Var out = f(tape);
    if (!std::isfinite(tape.item(out))) throw EvaluationError("gradient_check: function is not finite");
    tape.backward(out);
    tape.accumulate_param_grads();
  }
  evaluate(f, Precision::f64);

  // (param index, element index) for every coordinate, then a seeded sample.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p]->numel(); ++i) coords.emplace_back(p, i);
  Rng rng(options.seed);
  const std::size_t count = std::min(options.max_coordinates, coords.size());
  for (std::size_t i = 0; i < count; ++i) std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
  coords.resize(count);

  GradientCheckResult result;
  for (auto [p, i] : coords) {
    Tensor& t = *params[p];
    const float original = t[i];
    const float plus = static_cast<float>(original + options.step);
    const float minus = static_cast<float>(original - options.step);
    t[i] = plus;
    const double f_plus = evaluate(f, Precision::f64);
    t[i] = minus;
    const double f_minus = evaluate(f, Precision::f64);
    t[i] = original;
    const double numeric = (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
    const double analytic = t.grad()[i];
    const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), 1e-8);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.coordinates_checked;
  }

  for (std::size_t p = 0; p < params.size(); ++p) params[p]->set_requires_grad(saved_flags[p]);
  return result;
}

}  // namespace dspg::numerics
