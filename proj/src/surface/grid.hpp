#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace dspg::surface {

// Uniform bucket grid over a fixed point set for radius queries. Buckets are
// stored densely over the bounding box; visit order is bucket-major so
// callers needing a canonical order must sort what they collect.
class PointGrid {
 public:
  PointGrid(const std::vector<Eigen::Vector3d>& points, double cell) : cell_(cell) {
    if (points.empty()) return;
    lo_ = points.front();
    Eigen::Vector3d hi = lo_;
    for (const auto& p : points) {
      lo_ = lo_.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    for (int k = 0; k < 3; ++k) dims_[k] = static_cast<long>(std::floor((hi[k] - lo_[k]) / cell_)) + 1;
    start_.assign(static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]) + 1, 0);
    std::vector<long> bucket(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      bucket[i] = flat(coord(points[i]));
      ++start_[static_cast<std::size_t>(bucket[i]) + 1];
    }
    for (std::size_t b = 1; b < start_.size(); ++b) start_[b] += start_[b - 1];
    items_.resize(points.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) items_[fill[static_cast<std::size_t>(bucket[i])]++] = static_cast<std::uint32_t>(i);
  }

  // Calls f(index) for every point whose bucket intersects the cube of
  // half-width `radius` around x. Callers apply the exact distance test.
  template <class F>
  void visit(const Eigen::Vector3d& x, double radius, F&& f) const {
    if (items_.empty()) return;
    std::array<long, 3> a{}, b{};
    for (int k = 0; k < 3; ++k) {
      a[k] = std::max(0L, static_cast<long>(std::floor((x[k] - radius - lo_[k]) / cell_)));
      b[k] = std::min(dims_[k] - 1, static_cast<long>(std::floor((x[k] + radius - lo_[k]) / cell_)));
      if (a[k] > b[k]) return;
    }
    for (long i = a[0]; i <= b[0]; ++i)
      for (long j = a[1]; j <= b[1]; ++j)
        for (long k = a[2]; k <= b[2]; ++k) {
          const std::size_t bucket = static_cast<std::size_t>(flat({i, j, k}));
          for (std::uint32_t t = start_[bucket]; t < start_[bucket + 1]; ++t) f(items_[t]);
        }
  }

 private:
  std::array<long, 3> coord(const Eigen::Vector3d& p) const {
    std::array<long, 3> c{};
    for (int k = 0; k < 3; ++k) c[k] = std::clamp(static_cast<long>(std::floor((p[k] - lo_[k]) / cell_)), 0L, dims_[k] - 1);
    return c;
  }
  long flat(const std::array<long, 3>& c) const { return (c[0] * dims_[1] + c[1]) * dims_[2] + c[2]; }

  double cell_;
  Eigen::Vector3d lo_ = Eigen::Vector3d::Zero();
  std::array<long, 3> dims_{0, 0, 0};
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> items_;
};

}  // namespace dspg::surface
