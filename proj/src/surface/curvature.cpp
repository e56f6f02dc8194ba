#include "dspg/surface/curvature.hpp"

#include <cmath>

#include "dspg/error.hpp"
#include "grid.hpp"

namespace dspg::surface {

std::pair<Eigen::Vector3d, Eigen::Vector3d> tangent_frame(const Eigen::Vector3d& normal) {
  Eigen::Index axis = 0;
  normal.cwiseAbs().minCoeff(&axis);
  Eigen::Vector3d helper = Eigen::Vector3d::Zero();
  helper[axis] = 1.0;
  const Eigen::Vector3d e1 = normal.cross(helper).normalized();
  return {e1, normal.cross(e1)};
}

std::vector<CurvatureEstimate> estimate_curvature(const std::vector<Eigen::Vector3d>& points,
                                                  const std::vector<Eigen::Vector3d>& normals, double radius,
                                                  std::size_t min_neighbors) {
  if (points.size() != normals.size()) throw DimensionError("curvature: points and normals differ in count");
  std::vector<CurvatureEstimate> out(points.size());
  if (points.empty()) return out;
  const PointGrid grid(points, std::max(radius, 1.0));
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d& p = points[i];
    const auto [e1, e2] = tangent_frame(normals[i]);
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    std::size_t used = 0;
    grid.visit(p, radius, [&](std::uint32_t j) {
      const Eigen::Vector3d d = points[j] - p;
      const double n2 = d.squaredNorm();
      if (n2 > r2 || n2 < 1e-18) return;
      const double u = d.dot(e1), v = d.dot(e2), w = d.dot(normals[i]);
      const Eigen::Vector3d row(0.5 * u * u, u * v, 0.5 * v * v);
      ata.noalias() += row * row.transpose();
      atb += row * w;
      ++used;
    });
    if (used < min_neighbors) {
      out[i].fallback = true;
      continue;
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
    lu.setThreshold(1e-10);
    if (lu.rank() < 3) {
      out[i].fallback = true;
      continue;
    }
    const Eigen::Vector3d abc = lu.solve(atb);
    out[i].mean = -0.5 * (abc[0] + abc[2]);
    out[i].gaussian = abc[0] * abc[2] - abc[1] * abc[1];
  }
  return out;
}

}  // namespace dspg::surface
