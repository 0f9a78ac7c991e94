#pragma once

#include <string>

#include "mrl/fusion/belief.hpp"

namespace mrl::feedback {

// Reads the last JSON object in a model reply. Keys are action indices,
// optionally written as "Action 2"; values are masses. Missing actions get
// zero mass and sums within [0.98, 1.02] are renormalized.
// Errors: NoJsonFound, BadKey (not an index in [0, n_actions) or repeated),
// BadValue (not a finite non-negative number), BadSum. The raw text travels
// in Error::detail().
fusion::BasicBeliefAssignment parse_belief_json(const std::string& text, int n_actions);

// {"0": m0, "1": m1, ...} with round-trip precision.
std::string belief_to_json(const fusion::BasicBeliefAssignment& bba);

}  // namespace mrl::feedback
