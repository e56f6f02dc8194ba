#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

#include "dspg/numerics/tensor.hpp"
#include "dspg/structure_io/protein.hpp"

namespace dspg::surface {

inline constexpr std::size_t kNeighborAtoms = 16;
inline constexpr std::size_t kNeighborFeatures = structure::kElementCount + 1;

struct ChemicalNeighborhood {
  numerics::Tensor features;  // [N, 16, 7]: element one-hot then distance
  bool padded = false;        // fewer than 16 atoms; slots repeat atoms
};

// Indices of the 16 nearest atoms of every point by Euclidean distance, ties
// by atom index, nearest first. With M < 16 atoms slot j holds the
// floor(j * M / 16)-th nearest, so every atom appears and order is kept.
std::vector<std::array<std::size_t, kNeighborAtoms>> nearest_atoms(const std::vector<Eigen::Vector3d>& points,
                                                                  const std::vector<structure::Atom>& atoms);

// Element one-hot and distance for each slot of nearest_atoms.
ChemicalNeighborhood chemical_neighborhood(const std::vector<Eigen::Vector3d>& points,
                                           const std::vector<structure::Atom>& atoms);

}  // namespace dspg::surface
