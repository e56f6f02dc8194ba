#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dspg/cli/container.hpp"
#include "dspg/cli/run_config.hpp"
#include "dspg/numerics/tensor.hpp"
#include "dspg/structure_io/protein.hpp"
#include "dspg/surface/build.hpp"

namespace dspg::io {

// Everything downstream stages need from one structure: backbone
// coordinates, native sequence and the finished surface cloud.
struct ProteinCache {
  std::string id;
  std::string sequence;
  numerics::Tensor coords;  // [L, 3, 3]
  surface::SurfaceCloud cloud;
  std::uint64_t seed = 0;   // seed the surface was built with
  std::string surface_config;  // echo of the surface-builder keys
};

surface::SurfaceConfig surface_config(const RunConfig& cfg);
std::string surface_config_echo(const RunConfig& cfg);

ProteinCache make_cache(const structure::ProteinRecord& record, const RunConfig& cfg, std::uint64_t seed);

Container to_container(const ProteinCache& cache);
ProteinCache from_container(const Container& c);

void write_cache(const std::filesystem::path& path, const ProteinCache& cache);
ProteinCache read_cache(const std::filesystem::path& path);

// *.dspg files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_caches(const std::filesystem::path& dir);

}  // namespace dspg::io
