#pragma once

#include <span>
#include <vector>

#include "mrl/fusion/belief.hpp"

namespace mrl::fusion {

using Matrix = std::vector<std::vector<double>>;

// Floor applied to an average divergence before it is inverted into a
// credibility degree; identical evidence would otherwise divide by zero.
inline constexpr double kDivergenceFloor = 1e-12;
// Conflict at or above 1 - kConflictMargin is treated as total conflict.
inline constexpr double kConflictMargin = 1e-12;

// Shannon entropy in bits, 0 log 0 = 0.
double shannon_entropy(std::span<const double> dist);

// Belief Jensen-Shannon divergence in bits; lies in [0, 1].
double bjs_divergence(const BasicBeliefAssignment& a, const BasicBeliefAssignment& b);

// Pairwise BJS divergences between all rows; symmetric with a zero diagonal.
Matrix distance_matrix(const BeliefMatrix& bm);

// Mean off-diagonal divergence of each row.
std::vector<double> average_divergence(const Matrix& dmm);

// Inverse-divergence weights normalized to sum to one.
std::vector<double> credibility(std::span<const double> avg_div);

// exp of the Deng entropy. With singleton focal elements the cardinality
// term 2^|A| - 1 is 1 and the entropy reduces to Shannon entropy in bits.
double deng_information_volume(const BasicBeliefAssignment& m);

// Credibility scaled by normalized information volume, renormalized.
std::vector<double> adjusted_credibility(std::span<const double> crd, std::span<const double> iv);

BasicBeliefAssignment weighted_average_evidence(const BeliefMatrix& bm,
                                                std::span<const double> weights);

// Dempster's rule on singleton frames: elementwise product over (1 - K).
BasicBeliefAssignment dempster_combine(const BasicBeliefAssignment& m1,
                                       const BasicBeliefAssignment& m2);

struct FusionTrace {
  int log_base = 2;
  Matrix dmm;
  std::vector<double> avg_divergence;
  std::vector<double> credibility;
  std::vector<double> info_volume;
  std::vector<double> info_volume_normalized;
  std::vector<double> adjusted_credibility;
  std::vector<double> weighted_average;
  std::vector<double> bpa;
};

struct FusionResult {
  std::vector<double> bpa;
  FusionTrace trace;
};

// Full divergence-weighted fusion: distance matrix, credibility, information
// volume weighting, weighted average evidence, k-fold Dempster
// self-combination, and final normalization.
FusionResult fuse_bjsd_dst(const BeliefMatrix& bm);

}  // namespace mrl::fusion
