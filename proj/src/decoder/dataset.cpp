#include "dspg/decoder/dataset.hpp"

#include "dspg/backbone/features.hpp"
#include "dspg/error.hpp"
#include "dspg/structure_io/vocab.hpp"

namespace dspg::decoder {

PreparedProtein prepare(const io::ProteinCache& cache, const ModelConfig& cfg, std::uint64_t seed) {
  PreparedProtein p;
  p.id = cache.id;
  p.sequence = cache.sequence;
  p.geometry = backbone::featurize_residues(cache.coords, cfg.backbone.scalar_dim, cfg.backbone.vector_dim);
  const auto patches = surface_encoder::make_patches(cache.cloud, cfg.surface.patches, cfg.surface.patch_size,
                                                     numerics::derive_seed(seed, "patches." + cache.id));
  p.surface = surface_encoder::gather_inputs(cache.cloud, patches);
  p.tokens = structure::encode(cache.sequence).ids;
  if (p.length() + p.tokens.size() - 1 > cfg.decoder.max_len) {
    throw ContextLengthError("protein '" + p.id + "' of length " + std::to_string(p.length()) +
                             " does not fit max_len " + std::to_string(cfg.decoder.max_len));
  }
  return p;
}

std::vector<PreparedProtein> load_dataset(const std::filesystem::path& dir, const ModelConfig& cfg,
                                          std::uint64_t seed) {
  std::vector<PreparedProtein> out;
  for (const auto& path : io::list_caches(dir)) out.push_back(prepare(io::read_cache(path), cfg, seed));
  if (out.empty()) throw ArgumentError("no .dspg caches in " + dir.string());
  return out;
}

}  // namespace dspg::decoder
