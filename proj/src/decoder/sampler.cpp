#include "dspg/decoder/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dspg/error.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::decoder {

using structure::Vocabulary;

std::vector<double> sampling_distribution(std::span<const float> logits, double temperature, std::size_t top_k) {
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (top_k == 0) throw ArgumentError("top_k must be at least 1");
  const std::size_t v = logits.size();
  std::vector<std::size_t> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  const std::size_t k = std::min(top_k, v);
  std::vector<double> p(v, 0.0);
  const double top = static_cast<double>(logits[order[0]]) / temperature;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = std::exp(static_cast<double>(logits[order[i]]) / temperature - top);
    p[order[i]] = e;
    total += e;
  }
  for (double& x : p) x /= total;
  return p;
}

int sample_token(std::span<const float> logits, double temperature, std::size_t top_k, numerics::Rng& rng) {
  const std::vector<double> p = sampling_distribution(logits, temperature, top_k);
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;  // u landed in the rounding slack at the top
}

std::vector<int> generate(Decoder& decoder, const numerics::Tensor& prefix, const SamplingConfig& cfg) {
  const std::size_t l = prefix.dim(0);
  const std::size_t max_len = decoder.config().max_len;
  if (l + 1 > max_len) throw ContextLengthError("prefix leaves no room for decoding");
  std::size_t budget = cfg.max_tokens ? cfg.max_tokens : 2 * l;
  budget = std::min(budget, max_len - l - 1);
  numerics::Rng rng(cfg.seed);
  std::vector<int> inputs{Vocabulary::kBos};
  std::vector<int> emitted;
  // Without a key/value cache each step reruns the full causal forward; the
  // causal mask makes the last row identical to an incremental pass.
  for (std::size_t step = 0; step < budget; ++step) {
    numerics::Tape tape(numerics::Precision::f32, false);
    numerics::Var logits = decoder.forward(tape, tape.constant(prefix), inputs);
    const numerics::Tensor z = tape.value(logits);
    const std::size_t v = z.dim(1);
    const std::span<const float> last = z.data().subspan((z.dim(0) - 1) * v, v);
    const int token = sample_token(last, cfg.temperature, cfg.top_k, rng);
    if (token == Vocabulary::kEos) break;
    inputs.push_back(token);
    if (token != Vocabulary::kBos) emitted.push_back(token);
  }
  return emitted;
}

std::vector<int> generate(DsProGen& model, const PreparedProtein& protein, Branch branch, const SamplingConfig& cfg) {
  numerics::Tape tape(numerics::Precision::f32, false);
  const numerics::Tensor r = tape.value(model.prefix(tape, protein, branch));
  return generate(model.decoder(), r, cfg);
}

}  // namespace dspg::decoder
