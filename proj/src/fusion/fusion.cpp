#include "mrl/fusion/fusion.hpp"

#include <cmath>
#include <numeric>

#include "mrl/error.hpp"

namespace mrl::fusion {

double shannon_entropy(std::span<const double> dist) {
  validate_distribution(dist);
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double bjs_divergence(const BasicBeliefAssignment& a, const BasicBeliefAssignment& b) {
  if (a.frame_size() != b.frame_size()) {
    throw Error(ErrorCode::FrameMismatch, "BJS divergence needs equal frame sizes (" +
                                              std::to_string(a.frame_size()) + " vs " +
                                              std::to_string(b.frame_size()) + ")");
  }
  // Accumulate per hypothesis so that identical inputs cancel exactly.
  double d = 0.0;
  for (std::size_t j = 0; j < a.frame_size(); ++j) {
    const double p = a[j];
    const double q = b[j];
    const double mid = 0.5 * (p + q);
    if (p > 0.0) d += 0.5 * p * std::log2(p / mid);
    if (q > 0.0) d += 0.5 * q * std::log2(q / mid);
  }
  return std::max(d, 0.0);
}

Matrix distance_matrix(const BeliefMatrix& bm) {
  const std::size_t k = bm.rows();
  if (k < 2) throw Error(ErrorCode::DegenerateK, "distance matrix needs at least two sources");
  Matrix dmm(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      dmm[i][j] = dmm[j][i] = bjs_divergence(bm.row(i), bm.row(j));
    }
  }
  return dmm;
}

std::vector<double> average_divergence(const Matrix& dmm) {
  const std::size_t k = dmm.size();
  if (k < 2) throw Error(ErrorCode::DegenerateK, "average divergence needs k >= 2");
  std::vector<double> avg(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (dmm[i].size() != k) throw Error(ErrorCode::LengthMismatch, "distance matrix is not square");
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) s += dmm[i][j];
    }
    avg[i] = s / static_cast<double>(k - 1);
  }
  return avg;
}

std::vector<double> credibility(std::span<const double> avg_div) {
  std::vector<double> crd(avg_div.size());
  double total = 0.0;
  for (std::size_t i = 0; i < avg_div.size(); ++i) {
    crd[i] = 1.0 / std::max(avg_div[i], kDivergenceFloor);
    total += crd[i];
  }
  for (double& c : crd) c /= total;
  return crd;
}

double deng_information_volume(const BasicBeliefAssignment& m) {
  validate_distribution(m.masses());
  // Singleton focal elements: 2^|A| - 1 == 1.
  constexpr double kCardinalityTerm = 1.0;
  double deng = 0.0;
  for (double mass : m.masses()) {
    if (mass > 0.0) deng -= mass * std::log2(mass / kCardinalityTerm);
  }
  return std::exp(deng);
}

std::vector<double> adjusted_credibility(std::span<const double> crd, std::span<const double> iv) {
  if (crd.size() != iv.size()) {
    throw Error(ErrorCode::LengthMismatch, "credibility and information volume lengths differ");
  }
  const double iv_total = std::accumulate(iv.begin(), iv.end(), 0.0);
  std::vector<double> adjusted(crd.size());
  double total = 0.0;
  for (std::size_t i = 0; i < crd.size(); ++i) {
    adjusted[i] = crd[i] * (iv[i] / iv_total);
    total += adjusted[i];
  }
  for (double& a : adjusted) a /= total;
  return adjusted;
}

BasicBeliefAssignment weighted_average_evidence(const BeliefMatrix& bm,
                                                std::span<const double> weights) {
  if (weights.size() != bm.rows()) {
    throw Error(ErrorCode::LengthMismatch, "one weight per belief row is required");
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::InvalidWeights, "weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > kMassTolerance) {
    throw Error(ErrorCode::InvalidWeights, "weights must sum to 1");
  }
  std::vector<double> wae(bm.frame_size(), 0.0);
  for (std::size_t i = 0; i < bm.rows(); ++i) {
    for (std::size_t j = 0; j < wae.size(); ++j) wae[j] += weights[i] * bm.row(i)[j];
  }
  return BasicBeliefAssignment(std::move(wae));
}

BasicBeliefAssignment dempster_combine(const BasicBeliefAssignment& m1,
                                       const BasicBeliefAssignment& m2) {
  if (m1.frame_size() != m2.frame_size()) {
    throw Error(ErrorCode::FrameMismatch, "Dempster combination needs equal frame sizes");
  }
  std::vector<double> product(m1.frame_size());
  double agreement = 0.0;
  for (std::size_t j = 0; j < product.size(); ++j) {
    product[j] = m1[j] * m2[j];
    agreement += product[j];
  }
  // Conflict K = 1 - agreement for singleton focal elements.
  if (agreement <= kConflictMargin) {
    throw Error(ErrorCode::TotalConflict, "sources have disjoint support (K >= 1)");
  }
  for (double& p : product) p /= agreement;
  return BasicBeliefAssignment(std::move(product));
}

FusionResult fuse_bjsd_dst(const BeliefMatrix& bm) {
  const std::size_t k = bm.rows();
  if (k < 2) throw Error(ErrorCode::DegenerateK, "fusion needs at least two sources");

  FusionTrace trace;
  trace.dmm = distance_matrix(bm);
  trace.avg_divergence = average_divergence(trace.dmm);
  trace.credibility = credibility(trace.avg_divergence);
  trace.info_volume.reserve(k);
  for (const auto& row : bm.row_list()) trace.info_volume.push_back(deng_information_volume(row));
  const double iv_total =
      std::accumulate(trace.info_volume.begin(), trace.info_volume.end(), 0.0);
  for (double iv : trace.info_volume) trace.info_volume_normalized.push_back(iv / iv_total);
  trace.adjusted_credibility = adjusted_credibility(trace.credibility, trace.info_volume);

  const BasicBeliefAssignment wae = weighted_average_evidence(bm, trace.adjusted_credibility);
  trace.weighted_average = wae.values();

  // k copies of the weighted average in total.
  BasicBeliefAssignment combined = wae;
  for (std::size_t n = 1; n < k; ++n) combined = dempster_combine(combined, wae);

  std::vector<double> bpa = combined.values();
  const double total = std::accumulate(bpa.begin(), bpa.end(), 0.0);
  for (double& b : bpa) b /= total;
  trace.bpa = bpa;
  return {std::move(bpa), std::move(trace)};
}

}  // namespace mrl::fusion
