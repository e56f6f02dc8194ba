#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dspg/numerics/tensor.hpp"
#include "dspg/surface/build.hpp"

namespace dspg::surface_encoder {

// Greedy farthest-point sampling from `start`; ties go to the lowest index.
std::vector<std::size_t> farthest_point_sampling(const std::vector<Eigen::Vector3d>& points, std::size_t g,
                                                 std::size_t start);
// Same, with the start index drawn from `seed`.
std::vector<std::size_t> fps(const std::vector<Eigen::Vector3d>& points, std::size_t g, std::uint64_t seed);

// Row c holds the K nearest points to points[centers[c]] (itself included),
// nearest first, ties by index.
std::vector<std::vector<std::size_t>> knn_patches(const std::vector<Eigen::Vector3d>& points,
                                                  const std::vector<std::size_t>& centers, std::size_t k);

struct PatchSet {
  std::vector<std::size_t> centers;               // cloud row indices
  std::vector<std::vector<std::size_t>> patches;  // g x K cloud row indices
};

// Patches over the non-pad rows of a cloud. Pad rows are exact copies, so
// leaving them out only removes duplicates from the pooling.
PatchSet make_patches(const surface::SurfaceCloud& cloud, std::size_t g, std::size_t k, std::uint64_t seed);
// Patches around given centre coordinates (each snapped to its nearest
// non-pad row); used to pin the centres across re-orderings of a cloud.
PatchSet make_patches_at(const surface::SurfaceCloud& cloud, const std::vector<Eigen::Vector3d>& centres,
                         std::size_t k);

// Everything the surface encoder reads, gathered once per protein: only the
// points that belong to some patch are kept.
struct SurfaceInputs {
  numerics::Tensor neighborhoods;  // [(P*16), 7]
  numerics::Tensor curvatures;     // [P, 10]
  std::vector<std::vector<int>> groups;  // g lists of rows into the P points
  std::size_t point_count() const { return curvatures.shape().empty() ? 0 : curvatures.dim(0); }
};

SurfaceInputs gather_inputs(const surface::SurfaceCloud& cloud, const PatchSet& patches);

std::vector<Eigen::Vector3d> cloud_points(const surface::SurfaceCloud& cloud);

}  // namespace dspg::surface_encoder
