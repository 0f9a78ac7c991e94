#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "mrl/rl/config.hpp"
#include "mrl/rl/models.hpp"
#include "mrl/rl/ppo.hpp"

namespace mrl::rl {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string env;  // environment id the networks were trained on
  PolicyModel policy;
  ValueModel value;
  TrainingConfig config;
};

nlohmann::json mlp_to_json(const Mlp& net, double input_scale);
// Throws CheckpointFormat on malformed input or when the stored shapes do
// not match the stored parameter count.
Mlp mlp_from_json(const nlohmann::json& j, double& input_scale);

nlohmann::json adam_to_json(const AdamState& s);
AdamState adam_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Load and require the given observation size and action count; throws
// ShapeMismatch otherwise.
Checkpoint load_checkpoint_for(const std::filesystem::path& path, int obs_size, int num_actions);

}  // namespace mrl::rl
