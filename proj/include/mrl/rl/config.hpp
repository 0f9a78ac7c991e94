#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

namespace mrl::rl {

struct TrainingConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  int epochs_per_update = 4;
  int minibatch_size = 64;
  int rollout_length = 2048;
  long total_steps = 300000;
  long finetune_steps = 100000;
  double kl_coeff = 0.1;
  double shaping_coeff = 1.0;
  std::uint64_t seed = 1;

  double entropy_coeff = 0.01;
  double value_coeff = 0.5;
  double max_grad_norm = 0.5;
  double adam_epsilon = 1e-5;
  bool anneal_lr = true;
  bool clip_value = true;
  bool scale_rewards = true;
  std::vector<int> hidden_sizes = {64, 64};

  // Throws InvalidConfig naming the first violated constraint.
  void validate() const;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// Defaults for an environment: 300k steps on FindMilk; on Driving 500k
// steps at learning rate 1e-3 with 10 epochs per update.
TrainingConfig default_config(bool driving);

nlohmann::json to_json(const TrainingConfig& config);
// Keys absent from `j` keep the value from `base`; unknown keys are
// rejected with InvalidConfig.
TrainingConfig config_from_json(const nlohmann::json& j, const TrainingConfig& base = {});

}  // namespace mrl::rl
