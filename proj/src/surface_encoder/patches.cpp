#include "dspg/surface_encoder/patches.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "dspg/error.hpp"
#include "dspg/numerics/random.hpp"
#include "dspg/surface/neighborhood.hpp"

namespace dspg::surface_encoder {

std::vector<std::size_t> farthest_point_sampling(const std::vector<Eigen::Vector3d>& points, std::size_t g,
                                                 std::size_t start) {
  const std::size_t n = points.size();
  if (g > n) throw ArgumentError("fps: asked for " + std::to_string(g) + " centres from " + std::to_string(n) + " points");
  if (g == 0) return {};
  if (start >= n) throw ArgumentError("fps: start index out of range");
  std::vector<std::size_t> chosen{start};
  std::vector<double> gap(n, std::numeric_limits<double>::infinity());
  std::size_t last = start;
  gap[start] = -1.0;  // chosen points are never picked again
  while (chosen.size() < g) {
    std::size_t best = n;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (gap[i] < 0.0) continue;
      gap[i] = std::min(gap[i], (points[i] - points[last]).squaredNorm());
      if (gap[i] > best_gap) {
        best_gap = gap[i];
        best = i;
      }
    }
    chosen.push_back(best);
    gap[best] = -1.0;
    last = best;
  }
  return chosen;
}

std::vector<std::size_t> fps(const std::vector<Eigen::Vector3d>& points, std::size_t g, std::uint64_t seed) {
  if (points.empty()) throw ArgumentError("fps: empty point set");
  numerics::Rng rng(seed);
  return farthest_point_sampling(points, g, static_cast<std::size_t>(rng.below(points.size())));
}

std::vector<std::vector<std::size_t>> knn_patches(const std::vector<Eigen::Vector3d>& points,
                                                  const std::vector<std::size_t>& centers, std::size_t k) {
  const std::size_t n = points.size();
  if (k > n) throw ArgumentError("knn: K=" + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  std::vector<std::vector<std::size_t>> out;
  out.reserve(centers.size());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t c : centers) {
    if (c >= n) throw ArgumentError("knn: centre index out of range");
    for (std::size_t i = 0; i < n; ++i) dist[i] = {(points[i] - points[c]).squaredNorm(), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
    std::vector<std::size_t> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = dist[j].second;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Eigen::Vector3d> cloud_points(const surface::SurfaceCloud& cloud) {
  std::vector<Eigen::Vector3d> pts(cloud.size());
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    pts[r] = Eigen::Vector3d(cloud.points.at(r, 0), cloud.points.at(r, 1), cloud.points.at(r, 2));
  }
  return pts;
}

namespace {

struct RealRows {
  std::vector<Eigen::Vector3d> points;
  std::vector<std::size_t> row;  // subset index -> cloud row
};

RealRows real_rows(const surface::SurfaceCloud& cloud) {
  RealRows out;
  const auto pts = cloud_points(cloud);
  for (std::size_t r = 0; r < cloud.size(); ++r) {
    if (cloud.pad_mask[r]) continue;
    out.points.push_back(pts[r]);
    out.row.push_back(r);
  }
  return out;
}

PatchSet assemble(const RealRows& real, const std::vector<std::size_t>& centres, std::size_t k) {
  PatchSet set;
  for (const auto& patch : knn_patches(real.points, centres, k)) {
    std::vector<std::size_t> rows(patch.size());
    for (std::size_t j = 0; j < patch.size(); ++j) rows[j] = real.row[patch[j]];
    set.patches.push_back(std::move(rows));
  }
  for (std::size_t c : centres) set.centers.push_back(real.row[c]);
  return set;
}

}  // namespace

PatchSet make_patches(const surface::SurfaceCloud& cloud, std::size_t g, std::size_t k, std::uint64_t seed) {
  const RealRows real = real_rows(cloud);
  return assemble(real, fps(real.points, g, seed), k);
}

PatchSet make_patches_at(const surface::SurfaceCloud& cloud, const std::vector<Eigen::Vector3d>& centres,
                         std::size_t k) {
  const RealRows real = real_rows(cloud);
  if (real.points.empty()) throw ArgumentError("cloud has no real points");
  std::vector<std::size_t> idx;
  for (const auto& c : centres) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < real.points.size(); ++i) {
      if ((real.points[i] - c).squaredNorm() < (real.points[best] - c).squaredNorm()) best = i;
    }
    idx.push_back(best);
  }
  return assemble(real, idx, k);
}

SurfaceInputs gather_inputs(const surface::SurfaceCloud& cloud, const PatchSet& patches) {
  // Local numbering follows ascending cloud row so it does not depend on
  // patch order.
  std::map<std::size_t, int> local;
  for (const auto& patch : patches.patches)
    for (std::size_t r : patch) local.emplace(r, 0);
  int next = 0;
  for (auto& [row, id] : local) id = next++;

  constexpr std::size_t slots = surface::kNeighborAtoms, feats = surface::kNeighborFeatures;
  const std::size_t p = local.size();
  SurfaceInputs in;
  in.neighborhoods = numerics::Tensor({p * slots, feats});
  in.curvatures = numerics::Tensor({p, surface::kCurvatureFeatures});
  for (const auto& [row, id] : local) {
    const auto src = cloud.neighborhoods.data().subspan(row * slots * feats, slots * feats);
    std::copy(src.begin(), src.end(), in.neighborhoods.data().begin() + static_cast<long>(id * slots * feats));
    for (std::size_t c = 0; c < surface::kCurvatureFeatures; ++c) in.curvatures.at(id, c) = cloud.curvatures.at(row, c);
  }
  for (const auto& patch : patches.patches) {
    std::vector<int> g;
    for (std::size_t r : patch) g.push_back(local.at(r));
    in.groups.push_back(std::move(g));
  }
  return in;
}

}  // namespace dspg::surface_encoder
