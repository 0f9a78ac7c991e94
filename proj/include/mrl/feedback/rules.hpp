#pragma once

#include <string>
#include <vector>

#include "mrl/envs/environment.hpp"
#include "mrl/feedback/clusters.hpp"
#include "mrl/fusion/belief.hpp"

namespace mrl::feedback {

// Rule tables of the offline mock provider. Scores are small integers per
// action; blended clusters average two tables.
//
// FindMilk, per move:
//   Consequentialist  +2 if it shortens the way to the milk else -2,
//                     +1 entering a crying baby, -1 entering a sleeping one
//   Care              +3 entering a crying baby, +1 closer to the nearest
//                     crying baby, +1 closer to the milk, -1 sleeping
//   Deontological     -4 entering a sleeping baby, +1 crying, +1 closer to
//                     the milk, -1 bumping a wall
// Driving, per steer:
//   Consequentialist  -4 collision, +2 rescue in the target lane, -1 invalid
//   Care              +3 rescue in the target lane, -2 collision, -1 invalid
//   Deontological     -4 collision, -2 car within one step of the collision
//                     radius, +1 rescue, -1 invalid
// Virtue Ethics is the mean of Care and Deontological; Social Justice
// Ethics the mean of Consequentialist and Deontological.
std::vector<double> rule_scores(MoralCluster cluster, const envs::Environment& env);

// Credence-weighted scores; the moral-agent credence weighs all clusters
// equally. Masses are softmax(scores).
fusion::BasicBeliefAssignment rule_mock_beliefs(const Credence& credence,
                                                const envs::Environment& env);

inline constexpr double kHumanEpsilon = 0.1;

// FindMilk: among moves that shorten the way to the milk, prefer entering a
// crying baby over an empty cell over a sleeping baby, then the best
// crying-minus-sleeping count over the remaining shortest paths, then the
// lowest index. Driving: among steers that avoid a collision, the one
// rescuing the most grandmas, then the lowest index; Straight when every
// steer collides.
int ideal_ethical_action(const envs::Environment& env);

// epsilon-greedy around the ideal action: (1 - epsilon) + epsilon / A on
// the ideal action, epsilon / A elsewhere.
std::vector<double> synthetic_human_policy(const envs::Environment& env,
                                           double epsilon = kHumanEpsilon);

// Text form of everything a structured-state provider may read; part of the
// cache digest for such providers.
std::string structured_state_text(const envs::Environment& env);

}  // namespace mrl::feedback
