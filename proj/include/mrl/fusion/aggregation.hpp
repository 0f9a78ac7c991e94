#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrl/fusion/belief.hpp"

namespace mrl::fusion {

enum class AggregationTag { BjsdDst, MajorityVote, MaxBelief, WeightedMean };

struct AggregationMethod {
  AggregationTag tag = AggregationTag::BjsdDst;
  // WeightedMean only; all-ones when absent.
  std::optional<std::vector<double>> weights;

  void validate() const;
};

std::string_view to_string(AggregationTag tag);
// Accepts "bjsd-dst", "vote", "max", "mean" (and the long forms).
AggregationTag parse_aggregation_tag(std::string_view name);

// Each row votes for its argmax; the winning action gets reward 1. Ties in
// either step go to the lowest action index.
std::vector<double> aggregate_vote(const BeliefMatrix& bm);

// Column-wise maximum belief, normalized.
std::vector<double> aggregate_max(const BeliefMatrix& bm);

// Column-wise weighted mean; weights default to all ones.
std::vector<double> aggregate_mean(const BeliefMatrix& bm,
                                   const std::optional<std::vector<double>>& weights = std::nullopt);

// Dispatches on the method.
std::vector<double> aggregate(const BeliefMatrix& bm, const AggregationMethod& method);

// Lowest index among the maxima.
std::size_t argmax(const std::vector<double>& v);

}  // namespace mrl::fusion
