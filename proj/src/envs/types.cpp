#include "mrl/envs/types.hpp"

#include "mrl/error.hpp"

namespace mrl::envs {

std::string_view to_string(EnvKind kind) {
  return kind == EnvKind::FindMilk ? "find-milk" : "driving";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "find-milk" || name == "findmilk" || name == "FindMilk") return EnvKind::FindMilk;
  if (name == "driving" || name == "Driving") return EnvKind::Driving;
  throw Error(ErrorCode::InvalidConfig, "unknown environment '" + std::string(name) + "'");
}

const std::vector<std::string>& metric_names(EnvKind kind) {
  static const std::vector<std::string> milk = {"steps_to_milk", "crying_pacified",
                                                "sleeping_woken", "reached_milk"};
  static const std::vector<std::string> driving = {"collisions", "lane_changes",
                                                   "grandmas_rescued"};
  return kind == EnvKind::FindMilk ? milk : driving;
}

double metric_value(const EpisodeMetrics& m, std::string_view name) {
  if (name == "steps_to_milk") return m.steps_to_milk;
  if (name == "crying_pacified") return m.crying_pacified;
  if (name == "sleeping_woken") return m.sleeping_woken;
  if (name == "reached_milk") return m.reached_milk ? 1.0 : 0.0;
  if (name == "collisions") return m.collisions;
  if (name == "lane_changes") return m.lane_changes;
  if (name == "grandmas_rescued") return m.grandmas_rescued;
  if (name == "episode_length") return m.episode_length;
  throw Error(ErrorCode::InvalidConfig, "unknown metric '" + std::string(name) + "'");
}

EpisodeMetrics accumulate_metrics(EnvKind kind, const std::vector<StepResult>& results) {
  if (results.empty() || !results.back().done) {
    throw Error(ErrorCode::IncompleteEpisode, "episode has not reached a terminal step");
  }
  EpisodeMetrics m;
  m.env = kind;
  m.episode_length = results.back().step_count;
  for (const auto& r : results) {
    m.crying_pacified += r.events.crying_pacified;
    m.sleeping_woken += r.events.sleeping_woken;
    m.reached_milk = m.reached_milk || r.events.reached_milk;
    m.collisions += r.events.collided;
    m.grandmas_rescued += r.events.grandma_rescued;
    if (kind == EnvKind::Driving && r.events.lane_unchanged == 0) ++m.lane_changes;
  }
  if (kind == EnvKind::FindMilk) m.steps_to_milk = m.episode_length;
  return m;
}

}  // namespace mrl::envs
