#include "mrl/rl/config.hpp"

#include <cmath>

#include "mrl/error.hpp"

namespace mrl::rl {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void TrainingConfig::validate() const {
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip_epsilon > 0.0, "clip_epsilon must be positive");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  require(epochs_per_update >= 1, "epochs_per_update must be at least 1");
  require(minibatch_size >= 1, "minibatch_size must be at least 1");
  require(rollout_length >= minibatch_size, "rollout_length must hold at least one minibatch");
  require(total_steps >= 0, "total_steps must be non-negative");
  require(finetune_steps >= 0, "finetune_steps must be non-negative");
  require(kl_coeff >= 0.0, "kl_coeff must be non-negative");
  require(shaping_coeff >= 0.0, "shaping_coeff must be non-negative");
  require(entropy_coeff >= 0.0, "entropy_coeff must be non-negative");
  require(value_coeff > 0.0, "value_coeff must be positive");
  require(max_grad_norm > 0.0, "max_grad_norm must be positive");
  require(adam_epsilon > 0.0, "adam_epsilon must be positive");
  require(!hidden_sizes.empty(), "hidden_sizes must not be empty");
  for (int h : hidden_sizes) require(h > 0, "hidden_sizes entries must be positive");
}

TrainingConfig default_config(bool driving) {
  TrainingConfig c;
  if (driving) {
    c.total_steps = 500000;
    c.learning_rate = 1e-3;
    c.epochs_per_update = 10;
  }
  return c;
}

nlohmann::json to_json(const TrainingConfig& c) {
  return {
      {"gamma", c.gamma},
      {"gae_lambda", c.gae_lambda},
      {"clip_epsilon", c.clip_epsilon},
      {"learning_rate", c.learning_rate},
      {"epochs_per_update", c.epochs_per_update},
      {"minibatch_size", c.minibatch_size},
      {"rollout_length", c.rollout_length},
      {"total_steps", c.total_steps},
      {"finetune_steps", c.finetune_steps},
      {"kl_coeff", c.kl_coeff},
      {"shaping_coeff", c.shaping_coeff},
      {"seed", c.seed},
      {"entropy_coeff", c.entropy_coeff},
      {"value_coeff", c.value_coeff},
      {"max_grad_norm", c.max_grad_norm},
      {"adam_epsilon", c.adam_epsilon},
      {"anneal_lr", c.anneal_lr},
      {"clip_value", c.clip_value},
      {"scale_rewards", c.scale_rewards},
      {"hidden_sizes", c.hidden_sizes},
  };
}

TrainingConfig config_from_json(const nlohmann::json& j, const TrainingConfig& base) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "training config must be an object");
  TrainingConfig c = base;
  for (const auto& [key, value] : j.items()) {
    const char* k = key.c_str();
    if (key == "gamma") read(j, k, c.gamma);
    else if (key == "gae_lambda") read(j, k, c.gae_lambda);
    else if (key == "clip_epsilon") read(j, k, c.clip_epsilon);
    else if (key == "learning_rate") read(j, k, c.learning_rate);
    else if (key == "epochs_per_update") read(j, k, c.epochs_per_update);
    else if (key == "minibatch_size") read(j, k, c.minibatch_size);
    else if (key == "rollout_length") read(j, k, c.rollout_length);
    else if (key == "total_steps") read(j, k, c.total_steps);
    else if (key == "finetune_steps") read(j, k, c.finetune_steps);
    else if (key == "kl_coeff") read(j, k, c.kl_coeff);
    else if (key == "shaping_coeff") read(j, k, c.shaping_coeff);
    else if (key == "seed") read(j, k, c.seed);
    else if (key == "entropy_coeff") read(j, k, c.entropy_coeff);
    else if (key == "value_coeff") read(j, k, c.value_coeff);
    else if (key == "max_grad_norm") read(j, k, c.max_grad_norm);
    else if (key == "adam_epsilon") read(j, k, c.adam_epsilon);
    else if (key == "anneal_lr") read(j, k, c.anneal_lr);
    else if (key == "clip_value") read(j, k, c.clip_value);
    else if (key == "scale_rewards") read(j, k, c.scale_rewards);
    else if (key == "hidden_sizes") read(j, k, c.hidden_sizes);
    else throw Error(ErrorCode::InvalidConfig, "unknown training key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace mrl::rl
