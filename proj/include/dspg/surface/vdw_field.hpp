#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <memory>
#include <vector>

#include "dspg/structure_io/protein.hpp"

namespace dspg::surface {

// van der Waals radii in Angstrom, indexed by structure::Element.
struct RadiusTable {
  std::array<double, structure::kElementCount> radius{1.70, 1.55, 1.52, 1.80, 1.90, 1.10};
  double operator()(structure::Element e) const { return radius[static_cast<std::size_t>(e)]; }
};

class AtomGrid;

// Smooth signed distance to a union of spheres:
//   D(x) = -tau * ln sum_i exp(-(|x - a_i| - r_i) / tau)
// Negative inside, positive outside. Atoms farther than `cutoff` from x are
// skipped (their weight is below exp(-20) for any point near the surface);
// when no atom is in range every atom is used so D stays defined far away.
class VdwField {
 public:
  VdwField(std::vector<Eigen::Vector3d> centers, std::vector<double> radii, double tau = 0.3, double cutoff = 8.0);
  static VdwField from_atoms(const std::vector<structure::Atom>& atoms, const RadiusTable& radii, double tau = 0.3);
  ~VdwField();
  VdwField(VdwField&&) noexcept;
  VdwField& operator=(VdwField&&) noexcept;

  double value(const Eigen::Vector3d& x) const;
  double value_and_gradient(const Eigen::Vector3d& x, Eigen::Vector3d& gradient) const;

  std::size_t size() const { return centers_.size(); }
  const std::vector<Eigen::Vector3d>& centers() const { return centers_; }
  const std::vector<double>& radii() const { return radii_; }
  double tau() const { return tau_; }

 private:
  std::vector<Eigen::Vector3d> centers_;
  std::vector<double> radii_;
  double tau_;
  double cutoff_;
  std::unique_ptr<AtomGrid> grid_;
};

}  // namespace dspg::surface
