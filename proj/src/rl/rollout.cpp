#include "mrl/rl/rollout.hpp"

#include <cmath>

#include "mrl/error.hpp"

namespace mrl::rl {

RolloutCursor::RolloutCursor(std::unique_ptr<envs::Environment> env, std::uint64_t first_seed)
    : env_(std::move(env)), next_seed_(first_seed) {
  begin_episode();
}

RolloutCursor::RolloutCursor(std::unique_ptr<envs::Environment> env, const nlohmann::json& snapshot)
    : env_(std::move(env)) {
  std::vector<int> actions;
  try {
    episode_seed_ = snapshot.at("episode_seed").get<std::uint64_t>();
    next_seed_ = snapshot.at("next_seed").get<std::uint64_t>();
    actions = snapshot.at("actions").get<std::vector<int>>();
    episode_return_ = snapshot.at("episode_return").get<double>();
    total_steps_ = snapshot.at("total_steps").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointFormat, std::string("cursor snapshot: ") + e.what());
  }
  obs_ = env_->reset(episode_seed_);
  for (int a : actions) {
    if (env_->done()) throw Error(ErrorCode::CheckpointFormat, "cursor snapshot replays past the episode end");
    auto result = env_->step(a);
    env_return_ += result.r_env;
    obs_ = result.observation;
    episode_.push_back(std::move(result));
  }
  if (env_->done()) throw Error(ErrorCode::CheckpointFormat, "cursor snapshot ends on a finished episode");
  actions_ = std::move(actions);
}

nlohmann::json RolloutCursor::snapshot() const {
  return {{"episode_seed", episode_seed_},
          {"next_seed", next_seed_},
          {"actions", actions_},
          {"episode_return", episode_return_},
          {"total_steps", total_steps_}};
}

void RolloutCursor::begin_episode() {
  episode_seed_ = next_seed_++;
  obs_ = env_->reset(episode_seed_);
  actions_.clear();
  episode_.clear();
  episode_return_ = 0.0;
  env_return_ = 0.0;
}

std::vector<CompletedEpisode> RolloutCursor::take_completed() {
  auto out = std::move(completed_);
  completed_.clear();
  return out;
}

RolloutBuffer collect_rollout(RolloutCursor& cursor, const PolicyModel& policy,
                              const ValueModel& value, int steps, const RewardSource& source,
                              Rng& rng) {
  if (source.mode == RewardMode::Feedback && (!source.reference || !source.feedback)) {
    throw Error(ErrorCode::InvalidConfig, "feedback rewards need a reference policy and a provider");
  }
  RolloutBuffer buf;
  const auto n = static_cast<std::size_t>(steps);
  buf.obs.reserve(n);
  buf.actions.reserve(n);
  for (int t = 0; t < steps; ++t) {
    const auto& obs = cursor.obs_;
    const auto dist = policy_forward(policy, obs);
    const double v = value_forward(value, obs);
    const auto sample = sample_action(dist, rng);

    double r_shaping = 0.0;
    double kl_penalty = 0.0;
    if (source.mode == RewardMode::Feedback) {
      const auto ref = policy_forward(*source.reference, obs);
      kl_penalty = -source.kl_coeff * kl_categorical(dist.probs, ref.probs);
      r_shaping = source.feedback(*cursor.env_, sample.action);
    }

    auto result = cursor.env_->step(sample.action);
    double r_env = result.r_env;
    if (source.mode == RewardMode::EnvPlusHandcrafted) {
      r_shaping = cursor.env_->handcrafted_shaping(result.events);
    } else if (source.mode == RewardMode::Feedback) {
      r_env = kl_penalty;
    }
    const double reward = r_env + source.shaping_coeff * r_shaping;

    buf.obs.push_back(obs);
    buf.actions.push_back(sample.action);
    buf.log_probs.push_back(sample.log_prob);
    buf.r_env.push_back(r_env);
    buf.r_shaping.push_back(r_shaping);
    buf.rewards.push_back(reward);
    buf.values.push_back(v);
    buf.dones.push_back(result.done ? 1 : 0);

    ++cursor.total_steps_;
    cursor.actions_.push_back(sample.action);
    cursor.episode_return_ += reward;
    cursor.env_return_ += result.r_env;
    const bool done = result.done;
    cursor.obs_ = result.observation;
    cursor.episode_.push_back(std::move(result));
    if (done) {
      CompletedEpisode ep;
      ep.metrics = envs::accumulate_metrics(cursor.env_->kind(), cursor.episode_);
      ep.episode_return = cursor.episode_return_;
      ep.env_return = cursor.env_return_;
      ep.finished_at_step = cursor.total_steps_;
      cursor.completed_.push_back(std::move(ep));
      cursor.begin_episode();
    }
  }
  buf.last_value = buf.dones.back() ? 0.0 : value_forward(value, cursor.obs_);
  return buf;
}

void RewardScaler::scale(std::vector<double>& rewards, const std::vector<char>& dones,
                         double gamma) {
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    discounted_ = discounted_ * gamma + rewards[i];
    count_ += 1.0;
    const double delta = discounted_ - mean_;
    mean_ += delta / count_;
    m2_ += delta * (discounted_ - mean_);
    rewards[i] /= scale_factor();
    if (dones[i]) discounted_ = 0.0;
  }
}

double RewardScaler::scale_factor() const {
  const double var = count_ > 1.0 ? m2_ / count_ : 1.0;
  return std::sqrt(var) + 1e-8;
}

nlohmann::json RewardScaler::to_json() const {
  return {{"discounted", discounted_}, {"count", count_}, {"mean", mean_}, {"m2", m2_}};
}

RewardScaler RewardScaler::from_json(const nlohmann::json& j) {
  RewardScaler s;
  try {
    s.discounted_ = j.at("discounted").get<double>();
    s.count_ = j.at("count").get<double>();
    s.mean_ = j.at("mean").get<double>();
    s.m2_ = j.at("m2").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CheckpointFormat, std::string("reward scaler record: ") + e.what());
  }
  return s;
}

void run_ppo(PpoRun& run, RolloutCursor& cursor, const TrainingConfig& config, long total_steps,
             const RewardSource& source, const std::function<void(const UpdateLog&)>& on_update) {
  const long per_update = config.rollout_length;
  const int num_updates = static_cast<int>((total_steps + per_update - 1) / per_update);
  while (run.updates_done < num_updates) {
    TrainingConfig cfg = config;
    if (config.anneal_lr) {
      const double frac = 1.0 - static_cast<double>(run.updates_done) / num_updates;
      cfg.learning_rate = config.learning_rate * frac;
    }
    auto buffer = collect_rollout(cursor, run.policy, run.value, config.rollout_length, source,
                                  run.rng);
    if (config.scale_rewards) {
      // GAE and value targets see the scaled rewards; the composed rewards
      // stay available in the buffer's other columns.
      run.scaler.scale(buffer.rewards, buffer.dones, cfg.gamma);
    }
    compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
    KlAnchor anchor;
    if (source.mode == RewardMode::Feedback) {
      const double unit = config.scale_rewards ? run.scaler.scale_factor() : 1.0;
      anchor = {source.reference, source.kl_coeff / unit};
    }
    auto updated = ppo_update(run.policy, run.value, buffer, cfg, run.optimizer, run.rng, anchor);
    run.policy = std::move(updated.policy);
    run.value = std::move(updated.value);
    ++run.updates_done;
    if (on_update) {
      UpdateLog log;
      log.update = run.updates_done;
      log.steps = static_cast<long>(run.updates_done) * per_update;
      log.learning_rate = cfg.learning_rate;
      log.stats = updated.stats;
      log.episodes = cursor.take_completed();
      on_update(log);
    }
  }
}

}  // namespace mrl::rl
