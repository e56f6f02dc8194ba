#include "dspg/surface/build.hpp"

#include <algorithm>

#include "dspg/error.hpp"
#include "dspg/numerics/random.hpp"
#include "dspg/surface/neighborhood.hpp"
#include "dspg/surface/sampling.hpp"

namespace dspg::surface {

SurfaceCloud build_surface(const std::vector<structure::Atom>& atoms, const SurfaceConfig& cfg, std::uint64_t seed) {
  if (cfg.point_budget == 0) throw ArgumentError("point budget must be positive");
  const VdwField field = VdwField::from_atoms(atoms, cfg.radii, cfg.tau);

  SamplingOptions opts;
  opts.target_points = cfg.point_budget;
  opts.seed_frame = cfg.seed_frame;
  numerics::Rng sample_rng(numerics::derive_seed(seed, "surface.sample"));
  std::vector<Eigen::Vector3d> raw = sample_surface(field, sample_rng, opts);
  std::vector<Eigen::Vector3d> raw_normals = surface_normals(field, raw);
  if (raw.size() < opts.min_points) {
    throw DegenerateSurfaceError("too few surface points with a defined normal");
  }

  numerics::Rng budget_rng(numerics::derive_seed(seed, "surface.budget"));
  const BudgetSelection sel = enforce_budget(raw.size(), cfg.point_budget, budget_rng);
  const std::size_t n = sel.source.size();

  // Unique rows (pad_mask == 0) carry the geometry; pads copy them afterwards.
  std::vector<std::size_t> unique_row_of_source(raw.size(), SIZE_MAX);
  std::vector<Eigen::Vector3d> pts, nrm;
  for (std::size_t r = 0; r < n; ++r) {
    if (sel.pad_mask[r]) continue;
    const Eigen::Vector3d p = raw[sel.source[r]].cast<float>().cast<double>();
    const Eigen::Vector3d q = raw_normals[sel.source[r]].cast<float>().cast<double>();
    unique_row_of_source[sel.source[r]] = pts.size();
    pts.push_back(p);
    nrm.push_back(q);
  }

  std::vector<std::vector<CurvatureEstimate>> curv;
  for (double radius : kCurvatureRadii) curv.push_back(estimate_curvature(pts, nrm, radius));
  ChemicalNeighborhood hood = chemical_neighborhood(pts, atoms);

  SurfaceCloud cloud;
  cloud.points = numerics::Tensor({n, 3});
  cloud.normals = numerics::Tensor({n, 3});
  cloud.curvatures = numerics::Tensor({n, kCurvatureFeatures});
  cloud.neighborhoods = numerics::Tensor({n, kNeighborAtoms, kNeighborFeatures});
  cloud.pad_mask = sel.pad_mask;
  cloud.curvature_fallback.assign(n * kCurvatureRadii.size(), 0);
  cloud.neighborhood_padded = hood.padded;
  const std::size_t hood_stride = kNeighborAtoms * kNeighborFeatures;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t u = unique_row_of_source[sel.source[r]];
    for (int k = 0; k < 3; ++k) {
      cloud.points.at(r, k) = static_cast<float>(pts[u][k]);
      cloud.normals.at(r, k) = static_cast<float>(nrm[u][k]);
    }
    for (std::size_t s = 0; s < kCurvatureRadii.size(); ++s) {
      cloud.curvatures.at(r, 2 * s) = static_cast<float>(curv[s][u].mean);
      cloud.curvatures.at(r, 2 * s + 1) = static_cast<float>(curv[s][u].gaussian);
      cloud.curvature_fallback[r * kCurvatureRadii.size() + s] = curv[s][u].fallback ? 1 : 0;
    }
    std::copy_n(hood.features.data().begin() + static_cast<long>(u * hood_stride), hood_stride,
                cloud.neighborhoods.data().begin() + static_cast<long>(r * hood_stride));
  }
  return cloud;
}

SurfaceCloud build_surface(const structure::ProteinRecord& record, const SurfaceConfig& cfg, std::uint64_t seed) {
  return build_surface(record.atoms, cfg, seed);
}

void write_ply(const SurfaceCloud& cloud, std::ostream& out) {
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property float nx\nproperty float ny\nproperty float nz\nend_header\n";
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    out << cloud.points.at(r, 0) << ' ' << cloud.points.at(r, 1) << ' ' << cloud.points.at(r, 2) << ' '
        << cloud.normals.at(r, 0) << ' ' << cloud.normals.at(r, 1) << ' ' << cloud.normals.at(r, 2) << '\n';
  }
}

}  // namespace dspg::surface
