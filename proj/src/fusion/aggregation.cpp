#include "mrl/fusion/aggregation.hpp"

#include <algorithm>
#include <cmath>

#include "mrl/error.hpp"
#include "mrl/fusion/fusion.hpp"

namespace mrl::fusion {

void AggregationMethod::validate() const {
  if (!weights) return;
  if (tag != AggregationTag::WeightedMean) {
    throw Error(ErrorCode::InvalidWeights, "weights only apply to the weighted mean");
  }
  bool any_positive = false;
  for (double w : *weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::InvalidWeights, "weights must be finite and non-negative");
    }
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw Error(ErrorCode::InvalidWeights, "at least one weight must be positive");
}

std::string_view to_string(AggregationTag tag) {
  switch (tag) {
    case AggregationTag::BjsdDst: return "bjsd-dst";
    case AggregationTag::MajorityVote: return "vote";
    case AggregationTag::MaxBelief: return "max";
    case AggregationTag::WeightedMean: return "mean";
  }
  return "?";
}

AggregationTag parse_aggregation_tag(std::string_view name) {
  if (name == "bjsd-dst" || name == "bjsd_dst" || name == "BJSD_DST") return AggregationTag::BjsdDst;
  if (name == "vote" || name == "majority-vote" || name == "MajorityVote") {
    return AggregationTag::MajorityVote;
  }
  if (name == "max" || name == "max-belief" || name == "MaxBelief") return AggregationTag::MaxBelief;
  if (name == "mean" || name == "weighted-mean" || name == "WeightedMean") {
    return AggregationTag::WeightedMean;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown aggregation '" + std::string(name) + "'");
}

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] > v[best]) best = j;
  }
  return best;
}

std::vector<double> aggregate_vote(const BeliefMatrix& bm) {
  std::vector<int> votes(bm.frame_size(), 0);
  for (const auto& row : bm.row_list()) ++votes[argmax(row.values())];
  const auto winner = static_cast<std::size_t>(
      std::distance(votes.begin(), std::max_element(votes.begin(), votes.end())));
  std::vector<double> reward(bm.frame_size(), 0.0);
  reward[winner] = 1.0;
  return reward;
}

std::vector<double> aggregate_max(const BeliefMatrix& bm) {
  std::vector<double> best(bm.frame_size(), 0.0);
  for (const auto& row : bm.row_list()) {
    for (std::size_t j = 0; j < best.size(); ++j) best[j] = std::max(best[j], row[j]);
  }
  double total = 0.0;
  for (double b : best) total += b;
  for (double& b : best) b /= total;
  return best;
}

std::vector<double> aggregate_mean(const BeliefMatrix& bm,
                                   const std::optional<std::vector<double>>& weights) {
  std::vector<double> w = weights.value_or(std::vector<double>(bm.rows(), 1.0));
  if (w.size() != bm.rows()) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(bm.rows()) + " weights");
  }
  double wsum = 0.0;
  for (double x : w) wsum += x;
  if (!(wsum > 0.0)) throw Error(ErrorCode::InvalidWeights, "weights must have a positive sum");
  std::vector<double> reward(bm.frame_size(), 0.0);
  for (std::size_t i = 0; i < bm.rows(); ++i) {
    for (std::size_t j = 0; j < reward.size(); ++j) reward[j] += w[i] * bm.row(i)[j];
  }
  for (double& r : reward) r /= wsum;
  return reward;
}

std::vector<double> aggregate(const BeliefMatrix& bm, const AggregationMethod& method) {
  method.validate();
  switch (method.tag) {
    case AggregationTag::BjsdDst: return fuse_bjsd_dst(bm).bpa;
    case AggregationTag::MajorityVote: return aggregate_vote(bm);
    case AggregationTag::MaxBelief: return aggregate_max(bm);
    case AggregationTag::WeightedMean: return aggregate_mean(bm, method.weights);
  }
  throw Error(ErrorCode::InvalidConfig, "unhandled aggregation tag");
}

}  // namespace mrl::fusion
