#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dspg/decoder/model.hpp"
#include "dspg/numerics/random.hpp"

namespace dspg::decoder {

struct SamplingConfig {
  double temperature = 0.1;
  std::size_t top_k = 10;
  std::size_t max_tokens = 0;  // 0: twice the prefix length, capped by max_len
  std::uint64_t seed = 0;
};

// logits / temperature, keep the top_k largest (ties to the lower id),
// softmax in double and draw with `rng`.
int sample_token(std::span<const float> logits, double temperature, std::size_t top_k, numerics::Rng& rng);
// The probabilities sample_token draws from.
std::vector<double> sampling_distribution(std::span<const float> logits, double temperature, std::size_t top_k);

// Autoregressive decoding after the prefix starting from BOS. Stops at EOS or
// max_tokens. A sampled BOS is fed back but not emitted. Returns residue ids.
std::vector<int> generate(Decoder& decoder, const numerics::Tensor& prefix, const SamplingConfig& cfg);
std::vector<int> generate(DsProGen& model, const PreparedProtein& protein, Branch branch, const SamplingConfig& cfg);

}  // namespace dspg::decoder
