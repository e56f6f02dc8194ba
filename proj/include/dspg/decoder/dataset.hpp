#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dspg/cli/cache.hpp"
#include "dspg/decoder/model.hpp"

namespace dspg::decoder {

// Featurizes backbone geometry, draws surface patches (seeded by protein id)
// and encodes the native sequence.
PreparedProtein prepare(const io::ProteinCache& cache, const ModelConfig& cfg, std::uint64_t seed);

// Every cache in `dir`, in sorted order.
std::vector<PreparedProtein> load_dataset(const std::filesystem::path& dir, const ModelConfig& cfg,
                                          std::uint64_t seed);

}  // namespace dspg::decoder
