#pragma once

#include <cstdint>
#include <vector>

#include "mrl/envs/types.hpp"
#include "mrl/random.hpp"

namespace mrl::envs {

// Lane 0 is the left-most lane; Right increases the lane index.
enum class DrivingAction { Straight = 0, Right = 1, Left = 2 };
inline constexpr int kDrivingActions = 3;

struct DrivingParams {
  int lanes = 5;
  int start_lane = 2;
  int horizon = 300;
  double sensing_horizon = 20.0;  // spawn distance and observation cap
  double car_spawn_prob = 0.06;   // per lane per step
  double grandma_spawn_prob = 0.06;
  double approach_speed = 1.0;    // units per step, relative to the agent
  int warmup_steps = 20;
  double collision_radius = 1.0;
  double rescue_radius = 3.0;
  double collision_reward = -100.0;
};

struct RoadEntity {
  int lane = 0;
  double distance = 0.0;  // units ahead of the agent
  friend bool operator==(const RoadEntity&, const RoadEntity&) = default;
};

struct DrivingState {
  DrivingParams params;
  int agent_lane = 2;
  std::vector<RoadEntity> cars;
  std::vector<RoadEntity> grandmas;
  int timestep = 0;
  bool done = false;
  Rng rng;
};

// Agent in the start lane; lanes pre-populated by running the spawn process
// for params.warmup_steps steps. Deterministic per seed.
DrivingState driving_reset(std::uint64_t seed, const DrivingParams& params = {});

// Lane change (clamped), collision check on the post-move lane, rescue check
// on the pre- and post-move lanes, then every entity advances and new
// entities spawn at the sensing horizon.
StepResult driving_step(DrivingState& state, DrivingAction action);

// (car, grandma) closest distances for the left, current and right lanes.
// Nonexistent lanes and absent entities read as the sensing horizon.
std::vector<double> driving_observe(const DrivingState& state);

// Closest distance of `entities` in `lane`, or the sensing horizon.
double closest_in_lane(const DrivingState& state, const std::vector<RoadEntity>& entities,
                       int lane);

int target_lane(const DrivingState& state, DrivingAction action);

double handcrafted_shaping_driving(const StepEvents& events);

}  // namespace mrl::envs
