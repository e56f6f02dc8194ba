#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dspg::eval {

using Coords = std::vector<Eigen::Vector3d>;

// Fraction of native positions whose predicted residue matches. The
// prediction is truncated to, or padded with mismatches up to, the native
// length. Throws EvaluationError on an empty native sequence.
double recovery_rate(std::string_view native, std::string_view predicted);
// Position-wise identity; same contract as recovery_rate, reported separately.
double sequence_identity(std::string_view native, std::string_view predicted);

// Per-point distances after the optimal rigid superposition of q onto p
// (reflections excluded).
std::vector<double> superposed_distances(const Coords& p, const Coords& q);
double kabsch_rmsd(const Coords& p, const Coords& q);

// d0(L) = 1.24 (L - 15)^(1/3) - 1.8, never below 0.5.
double tm_d0(std::size_t length);
double tm_score_from_distances(std::span<const double> distances, std::size_t length);
// TM formula over the Kabsch superposition with identity residue
// correspondence; no alignment search.
double tm_score_fixed(const Coords& p, const Coords& q);

}  // namespace dspg::eval
