#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mrl/envs/environment.hpp"
#include "mrl/rl/models.hpp"

namespace mrl::harness {

inline constexpr int kDefaultEvalEpisodes = 50;
inline constexpr double kZ95 = 1.96;
inline constexpr std::uint64_t kDefaultEvalSeed = std::uint64_t{1} << 48;

// Mean with a 95% normal-approximation interval, mean ± 1.96·s/√n using
// the sample standard deviation. A single value has a zero-width interval.
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;

  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
};

MeanCi mean_ci(std::span<const double> values);

struct EvaluatedEpisode {
  std::uint64_t seed = 0;
  envs::EpisodeMetrics metrics;
  double env_return = 0.0;
};

struct MetricSummary {
  std::string metric;
  MeanCi stats;
};

struct EvaluationReport {
  envs::EnvKind env = envs::EnvKind::FindMilk;
  std::string run;
  std::vector<EvaluatedEpisode> episodes;
  std::vector<MetricSummary> summary;

  // Throws InvalidConfig for an unknown metric.
  const MeanCi& metric(std::string_view name) const;
};

// Reported metrics: the environment's metric_names(), then episode_length
// and env_return.
std::vector<std::string> report_metrics(envs::EnvKind kind);
double episode_value(const EvaluatedEpisode& e, std::string_view metric);

// Greedy rollouts of `policy` on episodes seeded seed, seed+1, ...
EvaluationReport evaluate_policy(const rl::PolicyModel& policy, envs::EnvKind env,
                                 envs::LayoutMode layout, int episodes, std::uint64_t seed,
                                 std::string run = {});

// Loads a checkpoint and evaluates it. Throws ShapeMismatch when the
// checkpoint does not fit the environment.
EvaluationReport evaluate(const std::filesystem::path& checkpoint, envs::EnvKind env,
                          envs::LayoutMode layout = envs::LayoutMode::Canonical,
                          int episodes = kDefaultEvalEpisodes, std::uint64_t seed = kDefaultEvalSeed,
                          std::string run = {});

// eval_episodes.csv (one row per episode) and eval_summary.csv (one row
// per metric) in `dir`.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace mrl::harness
