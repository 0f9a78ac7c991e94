#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mrl/envs/environment.hpp"
#include "mrl/random.hpp"
#include "mrl/rl/models.hpp"
#include "mrl/rl/ppo.hpp"

namespace mrl::rl {

enum class RewardMode { EnvOnly, EnvPlusHandcrafted, Feedback };

struct RewardSource {
  RewardMode mode = RewardMode::EnvOnly;
  double shaping_coeff = 0.0;  // c

  // Feedback mode only.
  const PolicyModel* reference = nullptr;
  double kl_coeff = 0.0;
  // Shaping reward for taking `action` in the environment's current state,
  // called before the environment is stepped.
  std::function<double(const envs::Environment& env, int action)> feedback;
};

struct CompletedEpisode {
  envs::EpisodeMetrics metrics;
  double episode_return = 0.0;   // sum of composed rewards
  double env_return = 0.0;       // sum of environment rewards
  long finished_at_step = 0;     // global step counter when it ended
};

// Environment plus in-progress episode carried across rollouts. Episodes
// are reset with consecutive seeds starting at `first_seed`.
class RolloutCursor {
 public:
  RolloutCursor(std::unique_ptr<envs::Environment> env, std::uint64_t first_seed);
  // Rebuilds a cursor from snapshot(), replaying the in-progress episode.
  RolloutCursor(std::unique_ptr<envs::Environment> env, const nlohmann::json& snapshot);

  envs::Environment& env() { return *env_; }
  const std::vector<double>& observation() const { return obs_; }
  long total_steps() const { return total_steps_; }
  std::vector<CompletedEpisode> take_completed();

  // Seed and actions of the in-progress episode plus counters. Completed
  // episodes not yet taken are not part of the snapshot.
  nlohmann::json snapshot() const;

 private:
  friend RolloutBuffer collect_rollout(RolloutCursor&, const PolicyModel&, const ValueModel&, int,
                                       const RewardSource&, Rng&);
  void begin_episode();

  std::unique_ptr<envs::Environment> env_;
  std::uint64_t next_seed_;
  std::uint64_t episode_seed_ = 0;
  std::vector<int> actions_;
  std::vector<double> obs_;
  std::vector<envs::StepResult> episode_;
  double episode_return_ = 0.0;
  double env_return_ = 0.0;
  long total_steps_ = 0;
  std::vector<CompletedEpisode> completed_;
};

// Samples `steps` transitions from the policy, composing rewards per the
// reward source and resetting finished episodes.
RolloutBuffer collect_rollout(RolloutCursor& cursor, const PolicyModel& policy,
                              const ValueModel& value, int steps, const RewardSource& source,
                              Rng& rng);

struct UpdateLog {
  int update = 0;
  long steps = 0;
  double learning_rate = 0.0;
  UpdateStats stats;
  std::vector<CompletedEpisode> episodes;
};

// Divides rewards by the running standard deviation of the discounted
// return, keeping value targets near unit scale whatever the reward
// magnitudes. Rewards are not re-centred.
class RewardScaler {
 public:
  // Scales one rollout in place, updating the running statistics.
  void scale(std::vector<double>& rewards, const std::vector<char>& dones, double gamma);
  double scale_factor() const;

  nlohmann::json to_json() const;
  static RewardScaler from_json(const nlohmann::json& j);

 private:
  double discounted_ = 0.0;
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct PpoRun {
  PolicyModel policy;
  ValueModel value;
  OptimizerState optimizer;
  Rng rng;
  int updates_done = 0;
  RewardScaler scaler;
};

// Runs ceil(total_steps / rollout_length) collect/GAE/update rounds with
// optional linear learning-rate annealing. `on_update` sees every update,
// including the episodes completed during its rollout.
void run_ppo(PpoRun& run, RolloutCursor& cursor, const TrainingConfig& config, long total_steps,
             const RewardSource& source, const std::function<void(const UpdateLog&)>& on_update);

}  // namespace mrl::rl
