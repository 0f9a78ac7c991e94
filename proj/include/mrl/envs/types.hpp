#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mrl::envs {

enum class EnvKind { FindMilk, Driving };

std::string_view to_string(EnvKind kind);  // "find-milk" / "driving"
EnvKind parse_env_kind(std::string_view name);

// Raw per-step ingredients of the handcrafted shaping rewards. Only the
// fields relevant to the emitting environment are ever non-zero.
struct StepEvents {
  int crying_pacified = 0;
  int sleeping_woken = 0;
  bool reached_milk = false;
  int grandma_rescued = 0;
  int lane_unchanged = 0;
  int collided = 0;
};

struct StepResult {
  std::vector<double> observation;
  double r_env = 0.0;
  StepEvents events;
  bool done = false;
  int step_count = 0;  // steps taken in the episode, including this one
};

struct EpisodeMetrics {
  EnvKind env = EnvKind::FindMilk;
  int episode_length = 0;
  // FindMilk
  int steps_to_milk = 0;
  int crying_pacified = 0;
  int sleeping_woken = 0;
  bool reached_milk = false;
  // Driving
  int collisions = 0;
  int lane_changes = 0;
  int grandmas_rescued = 0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

// Metric names reported for an environment, in a fixed order.
const std::vector<std::string>& metric_names(EnvKind kind);
double metric_value(const EpisodeMetrics& m, std::string_view name);

// Sums event flags over a completed episode. Throws IncompleteEpisode when
// the last result is not terminal.
EpisodeMetrics accumulate_metrics(EnvKind kind, const std::vector<StepResult>& results);

}  // namespace mrl::envs
