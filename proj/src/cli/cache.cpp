#include "dspg/cli/cache.hpp"

#include <algorithm>

#include "dspg/error.hpp"
#include "dspg/surface/neighborhood.hpp"

namespace dspg::io {

surface::SurfaceConfig surface_config(const RunConfig& cfg) {
  surface::SurfaceConfig s;
  s.tau = cfg.tau;
  s.point_budget = cfg.point_budget;
  s.radii.radius = {cfg.radius_C, cfg.radius_N, cfg.radius_O, cfg.radius_S, cfg.radius_Se, cfg.radius_H};
  return s;
}

std::string surface_config_echo(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : RunConfig::surface_keys()) out += k + " = " + cfg.get(k) + "\n";
  return out;
}

ProteinCache make_cache(const structure::ProteinRecord& record, const RunConfig& cfg, std::uint64_t seed) {
  ProteinCache c;
  c.id = record.id;
  c.sequence = record.sequence;
  c.coords = structure::backbone_coords(record);
  c.cloud = surface::build_surface(record, surface_config(cfg), seed);
  c.seed = seed;
  c.surface_config = surface_config_echo(cfg);
  return c;
}

Container to_container(const ProteinCache& cache) {
  Container c;
  c.put_string("id", cache.id);
  c.put_string("sequence", cache.sequence);
  c.put_f32("coords", cache.coords);
  c.put_u64("seed", {1}, std::span(&cache.seed, 1));
  c.put_string("surface.config", cache.surface_config);
  const auto& s = cache.cloud;
  c.put_f32("surface.points", s.points);
  c.put_f32("surface.normals", s.normals);
  c.put_f32("surface.curvatures", s.curvatures);
  c.put_f32("surface.neighborhoods", s.neighborhoods);
  c.put_u8("surface.pad_mask", {s.pad_mask.size()}, s.pad_mask);
  c.put_u8("surface.curvature_fallback", {s.size(), surface::kCurvatureRadii.size()}, s.curvature_fallback);
  const std::uint8_t padded = s.neighborhood_padded ? 1 : 0;
  c.put_u8("surface.neighborhood_padded", {1}, std::span(&padded, 1));
  return c;
}

ProteinCache from_container(const Container& c) {
  ProteinCache cache;
  cache.id = c.get_string("id");
  cache.sequence = c.get_string("sequence");
  cache.coords = c.get_f32("coords");
  cache.seed = c.get_u64("seed").at(0);
  cache.surface_config = c.get_string("surface.config");
  auto& s = cache.cloud;
  s.points = c.get_f32("surface.points");
  s.normals = c.get_f32("surface.normals");
  s.curvatures = c.get_f32("surface.curvatures");
  s.neighborhoods = c.get_f32("surface.neighborhoods");
  s.pad_mask = c.get_u8("surface.pad_mask");
  s.curvature_fallback = c.get_u8("surface.curvature_fallback");
  s.neighborhood_padded = c.get_u8("surface.neighborhood_padded").at(0) != 0;

  const std::size_t n = s.pad_mask.size(), l = cache.sequence.size();
  auto expect = [&](const numerics::Tensor& t, numerics::Shape want, const char* what) {
    if (t.shape() != want) {
      throw FormatError(std::string("cache chunk ") + what + " has shape " + numerics::shape_string(t.shape()) +
                        ", expected " + numerics::shape_string(want));
    }
  };
  expect(cache.coords, {l, 3, 3}, "coords");
  expect(s.points, {n, 3}, "surface.points");
  expect(s.normals, {n, 3}, "surface.normals");
  expect(s.curvatures, {n, surface::kCurvatureFeatures}, "surface.curvatures");
  expect(s.neighborhoods, {n, surface::kNeighborAtoms, surface::kNeighborFeatures}, "surface.neighborhoods");
  if (s.curvature_fallback.size() != n * surface::kCurvatureRadii.size()) {
    throw FormatError("cache chunk surface.curvature_fallback has the wrong size");
  }
  return cache;
}

void write_cache(const std::filesystem::path& path, const ProteinCache& cache) { to_container(cache).write(path); }

ProteinCache read_cache(const std::filesystem::path& path) { return from_container(Container::read(path)); }

std::vector<std::filesystem::path> list_caches(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ArgumentError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".dspg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace dspg::io
