#pragma once

#include <vector>

#include "mrl/random.hpp"
#include "mrl/rl/config.hpp"
#include "mrl/rl/models.hpp"

namespace mrl::rl {

struct RolloutBuffer {
  std::vector<std::vector<double>> obs;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> r_env;      // in feedback mode: the KL penalty term
  std::vector<double> r_shaping;
  std::vector<double> rewards;    // r_env + c * r_shaping
  std::vector<double> values;
  std::vector<char> dones;        // episode ended with this transition
  double last_value = 0.0;        // V(s) after the final transition

  // Filled by compute_gae; raw, not normalized.
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  void clear();
};

// Backward GAE recursion: delta_t = r_t + gamma V_{t+1} (1 - d_t) - V_t,
// A_t = delta_t + gamma lambda (1 - d_t) A_{t+1}; returns = A + V.
// Advantage normalization happens per batch inside ppo_update. Throws
// EmptyBuffer.
void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;
};

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr,
               double epsilon, double beta1 = 0.9, double beta2 = 0.999);

struct OptimizerState {
  AdamState policy;
  AdamState value;
};

// One minibatch: inputs are already normalized advantages.
struct LossBatch {
  Eigen::MatrixXd obs;  // raw observations, one column per sample
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> old_values;
};

struct LossResult {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;  // policy_loss - c_ent * entropy + c_v * value_loss
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  Eigen::VectorXd policy_grad;
  Eigen::VectorXd value_grad;
};

// Clipped surrogate, clipped value regression and entropy bonus, with
// analytic gradients for both networks.
LossResult ppo_loss(const PolicyModel& policy, const ValueModel& value, const LossBatch& batch,
                    const TrainingConfig& config);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double reference_kl = 0.0;  // mean KL to the anchor's reference, when set
  int minibatches = 0;
};

// Fine-tuning anchor. The per-step reward -coeff·KL(π(.|s)||π_ref(.|s))
// depends on the policy parameters directly, so the exact gradient of the
// return carries a pathwise term coeff·∇KL besides the score-function term
// that the advantages supply; the anchor adds that term to the policy loss.
// `coeff` is in the units of the buffer's rewards. Because the surrogate
// divides advantages by their standard deviation, the term is divided by
// the same factor to keep the two in proportion.
struct KlAnchor {
  const PolicyModel* reference = nullptr;
  double coeff = 0.0;
};

struct UpdateResult {
  PolicyModel policy;
  ValueModel value;
  UpdateStats stats;
};

// epochs x shuffled minibatches of Adam steps with per-network gradient
// norm clipping. The buffer must already carry advantages. `optimizer` is
// only modified when the whole update succeeds; a non-finite loss throws
// NonFiniteLoss with the offending minibatch statistics.
UpdateResult ppo_update(const PolicyModel& policy, const ValueModel& value,
                        const RolloutBuffer& buffer, const TrainingConfig& config,
                        OptimizerState& optimizer, Rng& rng, const KlAnchor& anchor = {});

}  // namespace mrl::rl
