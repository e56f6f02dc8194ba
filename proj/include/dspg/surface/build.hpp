#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "dspg/numerics/tensor.hpp"
#include "dspg/structure_io/protein.hpp"
#include "dspg/surface/curvature.hpp"
#include "dspg/surface/vdw_field.hpp"

namespace dspg::surface {

struct SurfaceConfig {
  double tau = 0.3;
  std::size_t point_budget = 8192;
  RadiusTable radii;
  Eigen::Matrix3d seed_frame = Eigen::Matrix3d::Identity();
};

inline constexpr std::size_t kCurvatureFeatures = 2 * kCurvatureRadii.size();

struct SurfaceCloud {
  numerics::Tensor points;         // [N, 3]
  numerics::Tensor normals;        // [N, 3]
  numerics::Tensor curvatures;     // [N, 10]: H1 K1 H2 K2 H3 K3 H5 K5 H10 K10
  numerics::Tensor neighborhoods;  // [N, 16, 7]
  std::vector<std::uint8_t> pad_mask;            // [N]
  std::vector<std::uint8_t> curvature_fallback;  // [N, 5]
  bool neighborhood_padded = false;
  std::size_t size() const { return pad_mask.size(); }
};

// sample -> normals -> budget -> curvature at each radius -> neighbourhoods.
// Points are stored in float32 and every derived quantity is computed from
// the stored coordinates, so the cloud is self-consistent. Pad rows are
// exact copies of their source rows.
SurfaceCloud build_surface(const std::vector<structure::Atom>& atoms, const SurfaceConfig& cfg, std::uint64_t seed);
SurfaceCloud build_surface(const structure::ProteinRecord& record, const SurfaceConfig& cfg, std::uint64_t seed);

// ASCII PLY with x y z nx ny nz vertex properties.
void write_ply(const SurfaceCloud& cloud, std::ostream& out);

}  // namespace dspg::surface
