#include "dspg/surface_encoder/encoder.hpp"

#include <cmath>

#include "dspg/error.hpp"
#include "dspg/surface/neighborhood.hpp"

namespace dspg::surface_encoder {

using numerics::Tape;
using numerics::Var;

namespace {
constexpr std::size_t kChemHidden = 32;
constexpr std::size_t kFuseHidden = 32;

double fan_in_std(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }
}  // namespace

ChemEmbed::ChemEmbed(numerics::Rng& rng) : slot_(surface::kNeighborFeatures, kChemHidden, kChemDim, rng) {
  for (auto& r : rounds_) r = numerics::Mlp(kChemDim, kChemHidden, kChemDim, rng);
}

Var ChemEmbed::forward(Tape& tape, Var neighborhoods) {
  const std::size_t slots = surface::kNeighborAtoms;
  if (neighborhoods.shape().size() != 2 || neighborhoods.dim(1) != surface::kNeighborFeatures ||
      neighborhoods.dim(0) % slots != 0) {
    throw DimensionError("chem_embed expects [(P*16), 7], got " + numerics::shape_string(neighborhoods.shape()));
  }
  Var h = slot_.forward(tape, neighborhoods);
  for (auto& round : rounds_) {
    Var message = round.forward(tape, numerics::group_mean(h, slots));
    h = numerics::add(h, numerics::repeat_rows(message, slots));
  }
  return numerics::group_mean(h, slots);
}

void ChemEmbed::collect(const std::string& prefix, numerics::ParamList& out) {
  slot_.collect(prefix + ".slot", out);
  for (std::size_t t = 0; t < rounds_.size(); ++t) rounds_[t].collect(prefix + ".round" + std::to_string(t), out);
}

void ChemEmbed::zero() {
  slot_.zero();
  for (auto& r : rounds_) r.zero();
}

FeatureFusion::FeatureFusion(std::size_t blocks, numerics::Rng& rng) {
  for (std::size_t b = 0; b < blocks; ++b) blocks_.emplace_back(kFusedDim, kFuseHidden, kFusedDim, rng);
}

Var FeatureFusion::forward(Tape& tape, Var chem, Var curvature) {
  Var f = numerics::concat_cols(chem, curvature);
  for (auto& block : blocks_) f = numerics::add(f, block.forward(tape, f));
  return f;
}

void FeatureFusion::collect(const std::string& prefix, numerics::ParamList& out) {
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b].collect(prefix + ".block" + std::to_string(b), out);
}

void FeatureFusion::zero() {
  for (auto& b : blocks_) b.zero();
}

SurfaceEncoder::SurfaceEncoder(const SurfaceEncoderConfig& cfg, numerics::Rng& rng)
    : cfg_(cfg),
      chem_(rng),
      fusion_(cfg.fuse_blocks, rng),
      lift_(kFusedDim, cfg.width, rng, fan_in_std(kFusedDim)),
      transformer_({cfg.width, cfg.heads, cfg.ffn_mult, cfg.layers, cfg.dropout}, rng),
      project_g_(cfg.width, cfg.projection, rng, fan_in_std(cfg.width)),
      project_s_(cfg.projection, cfg.hidden, rng, fan_in_std(cfg.projection)) {}

Var SurfaceEncoder::forward(Tape& tape, const SurfaceInputs& inputs, std::size_t length, numerics::Rng* dropout_rng) {
  if (inputs.groups.empty()) throw ArgumentError("surface encoder needs at least one patch");
  Var chem = chem_.forward(tape, tape.constant(inputs.neighborhoods));
  Var fused = fusion_.forward(tape, chem, tape.constant(inputs.curvatures));
  Var tokens = lift_.forward(tape, numerics::gather_max(fused, inputs.groups));
  tokens = transformer_.forward(tape, tokens, numerics::AttentionMask{}, dropout_rng);
  Var projected = project_s_.forward(tape, project_g_.forward(tape, tokens));
  return numerics::broadcast_rows(numerics::max_rows(projected), length);
}

numerics::Tensor SurfaceEncoder::encode(const surface::SurfaceCloud& cloud, std::size_t length, std::uint64_t seed) {
  const SurfaceInputs inputs = gather_inputs(cloud, make_patches(cloud, cfg_.patches, cfg_.patch_size, seed));
  Tape tape(numerics::Precision::f32, /*record=*/false);
  return tape.value(forward(tape, inputs, length));
}

void SurfaceEncoder::collect(const std::string& prefix, numerics::ParamList& out) {
  chem_.collect(prefix + ".chem", out);
  fusion_.collect(prefix + ".fuse", out);
  lift_.collect(prefix + ".lift", out);
  transformer_.collect(prefix + ".transformer", out);
  project_g_.collect(prefix + ".project_g", out);
  project_s_.collect(prefix + ".project_s", out);
}

}  // namespace dspg::surface_encoder
