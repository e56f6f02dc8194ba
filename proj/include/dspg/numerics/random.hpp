#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace dspg::numerics {

// Seeded generator with platform-independent uniform/normal draws. All
// randomness in the project flows through explicit seeds into this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). Uses rejection to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (no cached second value, so the stream is
  // a pure function of the engine state).
  double normal();

  std::string serialize() const;
  void deserialize(std::string_view state);

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit mix of a base seed with a string key (FNV-1a + splitmix).
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace dspg::numerics
