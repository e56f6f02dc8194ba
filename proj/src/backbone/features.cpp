#include "dspg/backbone/features.hpp"

#include <array>
#include <cmath>

#include "dspg/error.hpp"

namespace dspg::backbone {

double dihedral(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                const Eigen::Vector3d& d) {
  const Eigen::Vector3d b0 = a - b;
  const Eigen::Vector3d b1 = c - b;
  const Eigen::Vector3d b2 = d - c;
  const Eigen::Vector3d axis = b1.normalized();
  const Eigen::Vector3d v = b0 - b0.dot(axis) * axis;
  const Eigen::Vector3d w = b2 - b2.dot(axis) * axis;
  const double x = v.dot(w);
  const double y = axis.cross(v).dot(w);
  return std::atan2(y, x);
}

namespace {

Eigen::Vector3d unit(const Eigen::Vector3d& v, std::size_t residue, const char* what) {
  const double n = v.norm();
  if (n < 1e-6) {
    throw DegenerateGeometryError(std::string("coincident atoms (") + what + ") at residue " + std::to_string(residue));
  }
  return v / n;
}

}  // namespace

ResidueGeometry featurize_residues(const numerics::Tensor& coords, std::size_t scalar_dim, std::size_t vector_dim) {
  if (coords.rank() != 3 || coords.dim(1) != 3 || coords.dim(2) != 3) {
    throw DimensionError("featurize_residues: expected [L,3,3] coordinates, got " +
                         numerics::shape_string(coords.shape()));
  }
  if (scalar_dim < kRawScalarFeatures || vector_dim < kRawVectorFeatures) {
    throw ArgumentError("featurize_residues: need d_s >= 22 and d_v >= 4");
  }
  const std::size_t L = coords.dim(0);
  if (L < 2) throw DegenerateGeometryError("featurize_residues: need at least 2 residues");

  std::vector<Eigen::Vector3d> n(L), ca(L), c(L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      n[i][k] = coords[(i * 3 + 0) * 3 + k];
      ca[i][k] = coords[(i * 3 + 1) * 3 + k];
      c[i][k] = coords[(i * 3 + 2) * 3 + k];
    }
    if (!n[i].allFinite() || !ca[i].allFinite() || !c[i].allFinite()) {
      throw DegenerateGeometryError("non-finite coordinate at residue " + std::to_string(i));
    }
  }

  ResidueGeometry g;
  g.s = numerics::Tensor({L, scalar_dim});
  g.v = numerics::Tensor({L * 3, vector_dim});
  const double sigma = (kRbfMax - kRbfMin) / static_cast<double>(kRbfBins);

  for (std::size_t i = 0; i < L; ++i) {
    auto set_angle = [&](std::size_t slot, double angle) {
      g.s.at(i, slot) = static_cast<float>(std::sin(angle));
      g.s.at(i, slot + 1) = static_cast<float>(std::cos(angle));
    };
    if (i > 0) set_angle(0, dihedral(c[i - 1], n[i], ca[i], c[i]));
    if (i + 1 < L) {
      set_angle(2, dihedral(n[i], ca[i], c[i], n[i + 1]));
      set_angle(4, dihedral(ca[i], c[i], n[i + 1], ca[i + 1]));
      const double dist = (ca[i + 1] - ca[i]).norm();
      if (dist < 1e-6) throw DegenerateGeometryError("coincident consecutive CA atoms at residue " + std::to_string(i));
      for (std::size_t b = 0; b < kRbfBins; ++b) {
        const double center = kRbfMin + (kRbfMax - kRbfMin) * static_cast<double>(b) / static_cast<double>(kRbfBins - 1);
        const double z = (dist - center) / sigma;
        g.s.at(i, 6 + b) = static_cast<float>(std::exp(-z * z));
      }
    }

    std::array<Eigen::Vector3d, kRawVectorFeatures> vecs;
    vecs[0] = unit(n[i] - ca[i], i, "CA-N");
    vecs[1] = unit(c[i] - ca[i], i, "CA-C");
    vecs[2] = i + 1 < L ? unit(ca[i + 1] - ca[i], i, "CA-CA") : Eigen::Vector3d::Zero();
    vecs[3] = i > 0 ? unit(ca[i - 1] - ca[i], i, "CA-CA") : Eigen::Vector3d::Zero();
    for (std::size_t ch = 0; ch < kRawVectorFeatures; ++ch)
      for (std::size_t k = 0; k < 3; ++k) g.v.at(3 * i + k, ch) = static_cast<float>(vecs[ch][k]);
  }
  return g;
}

}  // namespace dspg::backbone
