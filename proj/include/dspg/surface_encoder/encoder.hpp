#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "dspg/numerics/layers.hpp"
#include "dspg/surface_encoder/patches.hpp"

namespace dspg::surface_encoder {

inline constexpr std::size_t kChemDim = 6;
inline constexpr std::size_t kFusedDim = kChemDim + surface::kCurvatureFeatures;  // 16
inline constexpr std::size_t kMessageRounds = 3;

struct SurfaceEncoderConfig {
  std::size_t patches = 32;       // g
  std::size_t patch_size = 16;    // K
  std::size_t width = 64;         // d_surf
  std::size_t projection = 512;   // h_g
  std::size_t hidden = 256;       // h_s
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_mult = 4;
  std::size_t fuse_blocks = 2;
  double dropout = 0.0;
};

// Per-point chemistry from the 16-atom neighbourhood: a slot MLP (7->32->6),
// three rounds h_j += MLP_t(mean_k h_k) among the slots, then a slot mean.
class ChemEmbed {
 public:
  ChemEmbed() = default;
  explicit ChemEmbed(numerics::Rng& rng);
  // neighborhoods [(P*16), 7] -> [P, 6]
  numerics::Var forward(numerics::Tape& tape, numerics::Var neighborhoods);
  void collect(const std::string& prefix, numerics::ParamList& out);
  void zero();

 private:
  numerics::Mlp slot_;
  std::array<numerics::Mlp, kMessageRounds> rounds_;
};

// [f_c ; u] followed by residual MLP blocks f <- f + MLP(f).
class FeatureFusion {
 public:
  FeatureFusion() = default;
  FeatureFusion(std::size_t blocks, numerics::Rng& rng);
  numerics::Var forward(numerics::Tape& tape, numerics::Var chem, numerics::Var curvature);
  void collect(const std::string& prefix, numerics::ParamList& out);
  void zero();

 private:
  std::vector<numerics::Mlp> blocks_;
};

// Patch tokens (max over member points) -> lift -> Transformer -> two linear
// maps to h_s -> max over tokens -> broadcast to L rows.
class SurfaceEncoder {
 public:
  SurfaceEncoder() = default;
  SurfaceEncoder(const SurfaceEncoderConfig& cfg, numerics::Rng& rng);

  numerics::Var forward(numerics::Tape& tape, const SurfaceInputs& inputs, std::size_t length,
                        numerics::Rng* dropout_rng = nullptr);
  // Inference helper: patches from `seed`, returns S [L, h_s].
  numerics::Tensor encode(const surface::SurfaceCloud& cloud, std::size_t length, std::uint64_t seed);
  void collect(const std::string& prefix, numerics::ParamList& out);

  const SurfaceEncoderConfig& config() const { return cfg_; }
  ChemEmbed& chem() { return chem_; }
  FeatureFusion& fusion() { return fusion_; }

 private:
  SurfaceEncoderConfig cfg_;
  ChemEmbed chem_;
  FeatureFusion fusion_;
  numerics::Linear lift_;
  numerics::Transformer transformer_;
  numerics::Linear project_g_;
  numerics::Linear project_s_;
};

}  // namespace dspg::surface_encoder
