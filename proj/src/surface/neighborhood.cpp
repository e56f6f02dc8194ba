#include "dspg/surface/neighborhood.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "dspg/error.hpp"

namespace dspg::surface {

std::vector<std::array<std::size_t, kNeighborAtoms>> nearest_atoms(const std::vector<Eigen::Vector3d>& points,
                                                                  const std::vector<structure::Atom>& atoms) {
  if (atoms.empty()) throw ArgumentError("chemical neighbourhood needs at least one atom");
  const std::size_t m = atoms.size();
  const std::size_t keep = std::min(m, kNeighborAtoms);
  std::vector<std::array<std::size_t, kNeighborAtoms>> out(points.size());
  std::vector<std::pair<double, std::size_t>> dist(m);
  auto closer = [](const auto& a, const auto& b) { return a.first < b.first || (a.first == b.first && a.second < b.second); };
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t a = 0; a < m; ++a) dist[a] = {(atoms[a].xyz - points[i]).norm(), a};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(keep), dist.end(), closer);
    for (std::size_t j = 0; j < kNeighborAtoms; ++j) out[i][j] = dist[m < kNeighborAtoms ? j * m / kNeighborAtoms : j].second;
  }
  return out;
}

ChemicalNeighborhood chemical_neighborhood(const std::vector<Eigen::Vector3d>& points,
                                           const std::vector<structure::Atom>& atoms) {
  const auto nearest = nearest_atoms(points, atoms);
  ChemicalNeighborhood out;
  out.padded = atoms.size() < kNeighborAtoms;
  out.features = numerics::Tensor({points.size(), kNeighborAtoms, kNeighborFeatures});
  for (std::size_t i = 0; i < points.size(); ++i) {
    float* row = out.features.data().data() + i * kNeighborAtoms * kNeighborFeatures;
    for (std::size_t j = 0; j < kNeighborAtoms; ++j) {
      const structure::Atom& atom = atoms[nearest[i][j]];
      float* slot = row + j * kNeighborFeatures;
      slot[static_cast<std::size_t>(atom.element)] = 1.0f;
      slot[structure::kElementCount] = static_cast<float>((atom.xyz - points[i]).norm());
    }
  }
  return out;
}

}  // namespace dspg::surface
