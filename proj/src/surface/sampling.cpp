#include "dspg/surface/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "dspg/error.hpp"

namespace dspg::surface {

namespace {

// Greedy thinning in candidate order. A sparse hash of cells with side equal
// to the spacing keeps each test to 27 buckets.
class Thinner {
 public:
  explicit Thinner(double spacing) : spacing_(spacing) {}

  bool try_add(const Eigen::Vector3d& p) {
    const auto c = cell(p);
    const double s2 = spacing_ * spacing_;
    for (long i = -1; i <= 1; ++i)
      for (long j = -1; j <= 1; ++j)
        for (long k = -1; k <= 1; ++k) {
          auto it = buckets_.find(key(c[0] + i, c[1] + j, c[2] + k));
          if (it == buckets_.end()) continue;
          for (std::size_t idx : it->second) {
            if ((kept_[idx] - p).squaredNorm() < s2) return false;
          }
        }
    buckets_[key(c[0], c[1], c[2])].push_back(kept_.size());
    kept_.push_back(p);
    return true;
  }

  std::vector<Eigen::Vector3d> take() { return std::move(kept_); }

 private:
  std::array<long, 3> cell(const Eigen::Vector3d& p) const {
    return {static_cast<long>(std::floor(p.x() / spacing_)), static_cast<long>(std::floor(p.y() / spacing_)),
            static_cast<long>(std::floor(p.z() / spacing_))};
  }
  static std::uint64_t key(long i, long j, long k) {
    auto u = [](long v) { return static_cast<std::uint64_t>(v + (1L << 20)) & 0x1FFFFF; };
    return (u(i) << 42) | (u(j) << 21) | u(k);
  }

  double spacing_;
  std::vector<Eigen::Vector3d> kept_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace

bool project_to_surface(const VdwField& field, Eigen::Vector3d& x, const SamplingOptions& opts) {
  Eigen::Vector3d grad;
  for (std::size_t step = 0; step <= opts.max_newton_steps; ++step) {
    const double d = field.value_and_gradient(x, grad);
    const double g2 = grad.squaredNorm();
    if (std::abs(d) < opts.tolerance) {
      // One extra Newton step tightens the point well below tolerance; it is
      // kept only if it actually helps.
      if (g2 > 1e-16) {
        const Eigen::Vector3d polished = x - (d / g2) * grad;
        if (std::abs(field.value(polished)) < std::abs(d)) x = polished;
      }
      return true;
    }
    if (step == opts.max_newton_steps || g2 < 1e-16) return false;
    Eigen::Vector3d delta = (d / g2) * grad;
    const double len = delta.norm();
    if (len > opts.step_clamp) delta *= opts.step_clamp / len;
    x -= delta;
  }
  return false;
}

std::vector<Eigen::Vector3d> sample_surface(const VdwField& field, numerics::Rng& rng, const SamplingOptions& opts) {
  const std::size_t atoms = field.size();
  const std::size_t per_atom =
      std::max<std::size_t>(16, (2 * opts.target_points + atoms - 1) / atoms);
  Thinner thinner(opts.dedup_distance);
  for (std::size_t a = 0; a < atoms; ++a) {
    const Eigen::Vector3d& centre = field.centers()[a];
    const double radius = field.radii()[a];
    for (std::size_t c = 0; c < per_atom; ++c) {
      Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
      const double shell = radius + rng.uniform();
      const double n = dir.norm();
      if (n < 1e-12) continue;
      Eigen::Vector3d x = centre + opts.seed_frame * (dir * (shell / n));
      if (project_to_surface(field, x, opts)) thinner.try_add(x);
    }
  }
  std::vector<Eigen::Vector3d> points = thinner.take();
  if (points.size() < opts.min_points) {
    throw DegenerateSurfaceError("surface sampling kept " + std::to_string(points.size()) + " points, need at least " +
                                 std::to_string(opts.min_points));
  }
  return points;
}

std::vector<Eigen::Vector3d> surface_normals(const VdwField& field, std::vector<Eigen::Vector3d>& points,
                                             std::vector<std::size_t>* singular) {
  std::vector<Eigen::Vector3d> normals;
  std::vector<Eigen::Vector3d> kept;
  normals.reserve(points.size());
  kept.reserve(points.size());
  Eigen::Vector3d grad;
  for (std::size_t i = 0; i < points.size(); ++i) {
    field.value_and_gradient(points[i], grad);
    const double n = grad.norm();
    if (n < 1e-8) {
      if (singular) singular->push_back(i);
      continue;
    }
    kept.push_back(points[i]);
    normals.push_back(grad / n);
  }
  points = std::move(kept);
  return normals;
}

BudgetSelection enforce_budget(std::size_t count, std::size_t budget, numerics::Rng& rng) {
  BudgetSelection sel;
  if (count == 0) throw ArgumentError("cannot fill a point budget from an empty cloud");
  if (count >= budget) {
    // Partial Fisher-Yates picks the subset; sorting restores input order.
    std::vector<std::size_t> idx(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    for (std::size_t i = 0; i < budget; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(count - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(budget);
    std::sort(idx.begin(), idx.end());
    sel.source = std::move(idx);
    sel.pad_mask.assign(budget, 0);
    return sel;
  }
  sel.source.resize(budget);
  sel.pad_mask.assign(budget, 0);
  for (std::size_t i = 0; i < count; ++i) sel.source[i] = i;
  for (std::size_t i = count; i < budget; ++i) {
    sel.source[i] = static_cast<std::size_t>(rng.below(count));
    sel.pad_mask[i] = 1;
  }
  return sel;
}

}  // namespace dspg::surface
