#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dspg/numerics/random.hpp"
#include "dspg/surface/vdw_field.hpp"

namespace dspg::surface {

struct SamplingOptions {
  std::size_t target_points = 8192;
  std::size_t max_newton_steps = 50;
  double step_clamp = 0.5;        // Angstrom
  double tolerance = 1e-3;        // |D| at convergence
  double dedup_distance = 0.4;    // minimum spacing between kept points
  std::size_t min_points = 32;
  // Seed directions are drawn in this frame. Passing the rotation applied to
  // the atoms makes the candidate set move rigidly with them.
  Eigen::Matrix3d seed_frame = Eigen::Matrix3d::Identity();
};

// Candidates are seeded in a 1 A shell outside every atom, projected onto the
// zero level of D with damped Newton steps and thinned so no two kept points
// are closer than dedup_distance. Throws DegenerateSurfaceError when fewer
// than min_points survive.
std::vector<Eigen::Vector3d> sample_surface(const VdwField& field, numerics::Rng& rng, const SamplingOptions& opts = {});

// Projects x onto D = 0. Returns false if it did not converge.
bool project_to_surface(const VdwField& field, Eigen::Vector3d& x, const SamplingOptions& opts = {});

// Outward unit normals grad D / |grad D|. Points whose gradient norm is below
// 1e-8 get no normal: their index is reported in `singular` and they are
// removed from `points`.
std::vector<Eigen::Vector3d> surface_normals(const VdwField& field, std::vector<Eigen::Vector3d>& points,
                                             std::vector<std::size_t>* singular = nullptr);

struct BudgetSelection {
  std::vector<std::size_t> source;   // row r copies input point source[r]
  std::vector<std::uint8_t> pad_mask;  // 1 for appended duplicates
};

// Exactly `budget` rows. Larger inputs are subsampled without replacement
// (kept in input order); smaller inputs keep every point and append copies
// drawn with replacement.
BudgetSelection enforce_budget(std::size_t count, std::size_t budget, numerics::Rng& rng);

}  // namespace dspg::surface
