#include "dspg/surface/vdw_field.hpp"

#include <cmath>
#include <limits>

#include "dspg/error.hpp"
#include "grid.hpp"

namespace dspg::surface {

class AtomGrid : public PointGrid {
 public:
  using PointGrid::PointGrid;
};

VdwField::VdwField(std::vector<Eigen::Vector3d> centers, std::vector<double> radii, double tau, double cutoff)
    : centers_(std::move(centers)), radii_(std::move(radii)), tau_(tau), cutoff_(cutoff) {
  if (centers_.empty()) throw ArgumentError("van der Waals field needs at least one atom");
  if (centers_.size() != radii_.size()) throw DimensionError("atom and radius counts differ");
  if (!(tau_ > 0.0)) throw ArgumentError("field temperature must be positive");
  for (double r : radii_) {
    if (!(r > 0.0)) throw ArgumentError("van der Waals radii must be positive");
  }
  grid_ = std::make_unique<AtomGrid>(centers_, cutoff_ / 2.0);
}

VdwField VdwField::from_atoms(const std::vector<structure::Atom>& atoms, const RadiusTable& table, double tau) {
  std::vector<Eigen::Vector3d> centers;
  std::vector<double> radii;
  centers.reserve(atoms.size());
  radii.reserve(atoms.size());
  for (const auto& a : atoms) {
    centers.push_back(a.xyz);
    radii.push_back(table(a.element));
  }
  return VdwField(std::move(centers), std::move(radii), tau);
}

VdwField::~VdwField() = default;
VdwField::VdwField(VdwField&&) noexcept = default;
VdwField& VdwField::operator=(VdwField&&) noexcept = default;

double VdwField::value(const Eigen::Vector3d& x) const {
  Eigen::Vector3d unused;
  return value_and_gradient(x, unused);
}

double VdwField::value_and_gradient(const Eigen::Vector3d& x, Eigen::Vector3d& gradient) const {
  // Two passes: find the smallest signed distance for a stable log-sum-exp,
  // then accumulate weights relative to it.
  thread_local std::vector<std::uint32_t> near;
  near.clear();
  const double cutoff2 = cutoff_ * cutoff_;
  grid_->visit(x, cutoff_, [&](std::uint32_t i) {
    if ((centers_[i] - x).squaredNorm() <= cutoff2) near.push_back(i);
  });
  if (near.empty()) {
    near.resize(centers_.size());
    for (std::size_t i = 0; i < centers_.size(); ++i) near[i] = static_cast<std::uint32_t>(i);
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t i : near) best = std::min(best, (x - centers_[i]).norm() - radii_[i]);
  double total = 0.0;
  Eigen::Vector3d weighted = Eigen::Vector3d::Zero();
  for (std::uint32_t i : near) {
    const Eigen::Vector3d diff = x - centers_[i];
    const double dist = diff.norm();
    const double w = std::exp(-(dist - radii_[i] - best) / tau_);
    total += w;
    // d|x-a|/dx is undefined at the centre; use the zero subgradient there.
    if (dist > 0.0) weighted += w * diff / dist;
  }
  gradient = weighted / total;
  return best - tau_ * std::log(total);
}

}  // namespace dspg::surface
