#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "mrl/envs/driving.hpp"
#include "mrl/envs/find_milk.hpp"
#include "mrl/envs/types.hpp"

namespace mrl::envs {

using StateView = std::variant<const FindMilkState*, const DrivingState*>;

// Uniform episodic interface used by rollout collection and evaluation.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  virtual int observation_size() const = 0;
  virtual int num_actions() const = 0;
  // Per-feature divisor applied by the networks; keeps inputs near [-1, 1].
  virtual double observation_scale() const = 0;

  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual std::vector<double> observe() const = 0;
  virtual bool done() const = 0;
  virtual double handcrafted_shaping(const StepEvents& events) const = 0;

  virtual StateView state() const = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
};

class FindMilkEnv final : public Environment {
 public:
  explicit FindMilkEnv(LayoutMode mode = LayoutMode::Canonical);
  // Fixed custom layout, used on every reset.
  explicit FindMilkEnv(FindMilkLayout layout);

  EnvKind kind() const override { return EnvKind::FindMilk; }
  int observation_size() const override { return 8; }
  int num_actions() const override { return kFindMilkActions; }
  double observation_scale() const override { return 7.0; }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  std::vector<double> observe() const override { return findmilk_observe(state_); }
  bool done() const override { return state_.done; }
  double handcrafted_shaping(const StepEvents& events) const override {
    return handcrafted_shaping_findmilk(events);
  }
  StateView state() const override { return &state_; }
  std::unique_ptr<Environment> clone() const override;

  const FindMilkState& raw() const { return state_; }

 private:
  LayoutMode mode_;
  std::optional<FindMilkLayout> custom_;
  FindMilkState state_;
};

class DrivingEnv final : public Environment {
 public:
  explicit DrivingEnv(DrivingParams params = {});

  EnvKind kind() const override { return EnvKind::Driving; }
  int observation_size() const override { return 6; }
  int num_actions() const override { return kDrivingActions; }
  double observation_scale() const override { return params_.sensing_horizon; }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(int action) override;
  std::vector<double> observe() const override { return driving_observe(state_); }
  bool done() const override { return state_.done; }
  double handcrafted_shaping(const StepEvents& events) const override {
    return handcrafted_shaping_driving(events);
  }
  StateView state() const override { return &state_; }
  std::unique_ptr<Environment> clone() const override;

  const DrivingState& raw() const { return state_; }

 private:
  DrivingParams params_;
  DrivingState state_;
};

std::unique_ptr<Environment> make_environment(EnvKind kind,
                                              LayoutMode layout = LayoutMode::Canonical);

// Seed plus action sequence; replaying re-executes the episode exactly.
struct ReplayLog {
  EnvKind env = EnvKind::FindMilk;
  LayoutMode layout = LayoutMode::Canonical;
  std::uint64_t seed = 0;
  std::vector<int> actions;
};

std::string write_replay(const ReplayLog& log);
ReplayLog parse_replay(const std::string& text);
std::vector<StepResult> replay(const ReplayLog& log);

}  // namespace mrl::envs
