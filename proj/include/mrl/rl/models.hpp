#pragma once

#include <span>
#include <vector>

#include "mrl/random.hpp"
#include "mrl/rl/mlp.hpp"

namespace mrl::rl {

// Observations are divided by input_scale before entering the network; the
// scale is fixed per environment and travels with the checkpoint.
struct PolicyModel {
  Mlp net;
  double input_scale = 1.0;

  int input_dim() const { return net.input_dim(); }
  int num_actions() const { return net.output_dim(); }
};

struct ValueModel {
  Mlp net;
  double input_scale = 1.0;

  int input_dim() const { return net.input_dim(); }
};

// Orthogonal init: sqrt(2) on hidden layers, 0.01 on the policy head and
// 1.0 on the value head.
PolicyModel make_policy(int input_dim, int num_actions, const std::vector<int>& hidden,
                        double input_scale, Rng& rng);
ValueModel make_value(int input_dim, const std::vector<int>& hidden, double input_scale, Rng& rng);

struct Categorical {
  std::vector<double> probs;
  std::vector<double> log_probs;

  double entropy() const;
};

Categorical categorical_from_logits(std::span<const double> logits);

// Throws ShapeMismatch for a wrong-length observation and NonFiniteInput for
// NaN/inf entries.
Categorical policy_forward(const PolicyModel& model, std::span<const double> obs);
double value_forward(const ValueModel& model, std::span<const double> obs);

// Packs observations column-wise and applies the model's input scale.
Eigen::MatrixXd pack_inputs(const std::vector<std::vector<double>>& obs, double input_scale);

struct Sample {
  int action = 0;
  double log_prob = 0.0;
};

// Inverse-CDF draw from one uniform variate.
Sample sample_action(const Categorical& dist, Rng& rng);

// Greedy action, ties to the lowest index.
int greedy_action(const Categorical& dist);

// KL(p || q) in nats. Throws SupportViolation when q is zero where p is not.
double kl_categorical(std::span<const double> p, std::span<const double> q);

struct KlGradient {
  double mean_kl = 0.0;
  Eigen::VectorXd grad;  // d mean_kl / d policy parameters
};

// Mean KL(policy(.|s) || reference(.|s)) over the observation columns and
// its gradient with respect to the policy parameters.
KlGradient kl_to_reference(const PolicyModel& policy, const PolicyModel& reference,
                           const Eigen::MatrixXd& scaled_obs);

}  // namespace mrl::rl
