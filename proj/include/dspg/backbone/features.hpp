#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "dspg/numerics/tensor.hpp"

namespace dspg::backbone {

// Per-residue GVP inputs. Scalars s are [L, d_s]; vectors V are stored as
// [(L*3), d_v] where row 3*i + k is spatial component k of residue i.
struct ResidueGeometry {
  numerics::Tensor s;
  numerics::Tensor v;

  std::size_t length() const { return s.shape().empty() ? 0 : s.dim(0); }
};

// Number of populated feature slots before zero padding.
inline constexpr std::size_t kRawScalarFeatures = 22;  // sin/cos of phi, psi, omega + 16 RBF bins
inline constexpr std::size_t kRawVectorFeatures = 4;   // CA->N, CA->C, CA->next CA, CA->prev CA
inline constexpr std::size_t kRbfBins = 16;
inline constexpr double kRbfMin = 2.0;
inline constexpr double kRbfMax = 22.0;

// Signed dihedral angle (radians) about the b-c bond.
double dihedral(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                const Eigen::Vector3d& d);

// Scalar layout: [sin phi, cos phi, sin psi, cos psi, sin omega, cos omega,
// 16 Gaussian RBF bins of |CA_i - CA_{i+1}|], zero-padded to scalar_dim.
// phi is undefined for the first residue, psi/omega/RBF for the last; those
// slots are zero. omega_i is the CA_i-C_i-N_{i+1}-CA_{i+1} torsion.
// Vector layout: unit CA->N, CA->C, CA_i->CA_{i+1}, CA_i->CA_{i-1} (zero at
// chain ends), zero-padded to vector_dim rows.
//
// Throws DegenerateGeometryError when consecutive CA atoms (or a residue's
// N/C and CA) coincide to within 1e-6 A.
ResidueGeometry featurize_residues(const numerics::Tensor& coords, std::size_t scalar_dim = 128,
                                   std::size_t vector_dim = 16);

}  // namespace dspg::backbone
