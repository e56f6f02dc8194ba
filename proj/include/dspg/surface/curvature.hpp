#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

namespace dspg::surface {

// Scale radii for the multiscale curvature features, in Angstrom.
inline constexpr std::array<double, 5> kCurvatureRadii{1.0, 2.0, 3.0, 5.0, 10.0};

struct CurvatureEstimate {
  double mean = 0.0;      // H, positive on a sphere with outward normals
  double gaussian = 0.0;  // K
  bool fallback = false;  // too few neighbours or an ill-posed fit
};

// Least-squares quadric w = (a u^2 + 2 b u v + c v^2) / 2 in the tangent frame
// of each point, fitted to the offsets of all other points within `radius`.
// H = -(a + c) / 2, K = a c - b^2. Coincident points are ignored.
std::vector<CurvatureEstimate> estimate_curvature(const std::vector<Eigen::Vector3d>& points,
                                                  const std::vector<Eigen::Vector3d>& normals, double radius,
                                                  std::size_t min_neighbors = 5);

// Orthonormal tangent pair for a unit normal.
std::pair<Eigen::Vector3d, Eigen::Vector3d> tangent_frame(const Eigen::Vector3d& normal);

}  // namespace dspg::surface
