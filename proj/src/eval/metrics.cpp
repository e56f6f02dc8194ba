#include "dspg/eval/metrics.hpp"

#include <cmath>

#include "dspg/error.hpp"

namespace dspg::eval {

double recovery_rate(std::string_view native, std::string_view predicted) {
  if (native.empty()) throw EvaluationError("recovery rate of an empty sequence is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < native.size(); ++i) hits += i < predicted.size() && native[i] == predicted[i];
  return static_cast<double>(hits) / static_cast<double>(native.size());
}

double sequence_identity(std::string_view native, std::string_view predicted) { return recovery_rate(native, predicted); }

std::vector<double> superposed_distances(const Coords& p, const Coords& q) {
  if (p.size() != q.size()) {
    throw DimensionError("superposition needs equal lengths, got " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  if (p.size() < 3) throw ArgumentError("superposition needs at least 3 points");
  const std::size_t n = p.size();
  Eigen::Vector3d cp = Eigen::Vector3d::Zero(), cq = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    cp += p[i];
    cq += q[i];
  }
  cp /= static_cast<double>(n);
  cq /= static_cast<double>(n);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) h += (q[i] - cq) * (p[i] - cp).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  // Flip the weakest axis when the best orthogonal map is a reflection.
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d rot = svd.matrixV() * d * svd.matrixU().transpose();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (rot * (q[i] - cq) - (p[i] - cp)).norm();
  return out;
}

double kabsch_rmsd(const Coords& p, const Coords& q) {
  const auto d = superposed_distances(p, q);
  double s = 0.0;
  for (double x : d) s += x * x;
  return std::sqrt(s / static_cast<double>(d.size()));
}

double tm_d0(std::size_t length) {
  const double l = static_cast<double>(length);
  const double d0 = l > 15.0 ? 1.24 * std::cbrt(l - 15.0) - 1.8 : 0.5;
  return std::max(d0, 0.5);
}

double tm_score_from_distances(std::span<const double> distances, std::size_t length) {
  if (length == 0) throw EvaluationError("TM-score of an empty structure is undefined");
  const double d0 = tm_d0(length);
  double s = 0.0;
  for (double d : distances) s += 1.0 / (1.0 + (d / d0) * (d / d0));
  return s / static_cast<double>(length);
}

double tm_score_fixed(const Coords& p, const Coords& q) {
  const auto d = superposed_distances(p, q);
  return tm_score_from_distances(d, p.size());
}

}  // namespace dspg::eval
