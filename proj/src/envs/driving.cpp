#include "mrl/envs/driving.hpp"

#include <algorithm>

#include "mrl/error.hpp"

namespace mrl::envs {

namespace {

void advance_and_spawn(DrivingState& state) {
  const auto& p = state.params;
  auto advance = [&](std::vector<RoadEntity>& entities) {
    for (auto& e : entities) e.distance -= p.approach_speed;
    std::erase_if(entities, [](const RoadEntity& e) { return e.distance < 0.0; });
  };
  advance(state.cars);
  advance(state.grandmas);
  for (int lane = 0; lane < p.lanes; ++lane) {
    if (state.rng.uniform() < p.car_spawn_prob) state.cars.push_back({lane, p.sensing_horizon});
    if (state.rng.uniform() < p.grandma_spawn_prob) {
      state.grandmas.push_back({lane, p.sensing_horizon});
    }
  }
}

}  // namespace

DrivingState driving_reset(std::uint64_t seed, const DrivingParams& params) {
  DrivingState state;
  state.params = params;
  state.agent_lane = params.start_lane;
  state.rng = Rng(seed);
  for (int i = 0; i < params.warmup_steps; ++i) advance_and_spawn(state);
  return state;
}

int target_lane(const DrivingState& state, DrivingAction action) {
  int lane = state.agent_lane;
  if (action == DrivingAction::Right) ++lane;
  if (action == DrivingAction::Left) --lane;
  return std::clamp(lane, 0, state.params.lanes - 1);
}

StepResult driving_step(DrivingState& state, DrivingAction action) {
  if (state.done) throw Error(ErrorCode::EpisodeDone, "driving episode already finished");
  const int a = static_cast<int>(action);
  if (a < 0 || a >= kDrivingActions) {
    throw Error(ErrorCode::InvalidAction, "driving action " + std::to_string(a));
  }
  const auto& p = state.params;
  StepResult result;
  const int previous = state.agent_lane;
  state.agent_lane = target_lane(state, action);
  result.events.lane_unchanged = state.agent_lane == previous ? 1 : 0;

  const auto hits = std::erase_if(state.cars, [&](const RoadEntity& car) {
    return car.lane == state.agent_lane && car.distance <= p.collision_radius;
  });
  result.events.collided = hits > 0 ? 1 : 0;

  const auto rescued = std::erase_if(state.grandmas, [&](const RoadEntity& g) {
    return (g.lane == previous || g.lane == state.agent_lane) && g.distance <= p.rescue_radius;
  });
  result.events.grandma_rescued = static_cast<int>(rescued);

  advance_and_spawn(state);
  ++state.timestep;
  state.done = state.timestep >= p.horizon;

  result.r_env = p.collision_reward * result.events.collided;
  result.done = state.done;
  result.step_count = state.timestep;
  result.observation = driving_observe(state);
  return result;
}

double closest_in_lane(const DrivingState& state, const std::vector<RoadEntity>& entities,
                       int lane) {
  double best = state.params.sensing_horizon;
  if (lane < 0 || lane >= state.params.lanes) return best;
  for (const auto& e : entities) {
    if (e.lane == lane) best = std::min(best, e.distance);
  }
  return best;
}

std::vector<double> driving_observe(const DrivingState& state) {
  std::vector<double> obs;
  obs.reserve(6);
  for (int lane : {state.agent_lane - 1, state.agent_lane, state.agent_lane + 1}) {
    obs.push_back(closest_in_lane(state, state.cars, lane));
    obs.push_back(closest_in_lane(state, state.grandmas, lane));
  }
  return obs;
}

double handcrafted_shaping_driving(const StepEvents& events) {
  constexpr double kGrandma = 400.0;
  constexpr double kSteady = 20.0;
  return kGrandma * events.grandma_rescued + kSteady * events.lane_unchanged;
}

}  // namespace mrl::envs
