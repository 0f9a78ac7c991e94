#include "mrl/harness/evaluation.hpp"

#include <cmath>

#include "mrl/error.hpp"
#include "mrl/harness/csv.hpp"
#include "mrl/rl/checkpoint.hpp"

namespace mrl::harness {

MeanCi mean_ci(std::span<const double> values) {
  MeanCi out;
  out.n = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  out.half_width = kZ95 * sd / std::sqrt(static_cast<double>(out.n));
  return out;
}

const MeanCi& EvaluationReport::metric(std::string_view name) const {
  for (const auto& s : summary) {
    if (s.metric == name) return s.stats;
  }
  throw Error(ErrorCode::InvalidConfig, "report has no metric '" + std::string(name) + "'");
}

std::vector<std::string> report_metrics(envs::EnvKind kind) {
  auto out = envs::metric_names(kind);
  out.push_back("episode_length");
  out.push_back("env_return");
  return out;
}

double episode_value(const EvaluatedEpisode& e, std::string_view metric) {
  if (metric == "env_return") return e.env_return;
  return envs::metric_value(e.metrics, metric);
}

EvaluationReport evaluate_policy(const rl::PolicyModel& policy, envs::EnvKind env_kind,
                                 envs::LayoutMode layout, int episodes, std::uint64_t seed,
                                 std::string run) {
  if (episodes < 1) throw Error(ErrorCode::InvalidConfig, "evaluation needs at least one episode");
  auto env = envs::make_environment(env_kind, layout);
  if (policy.net.input_dim() != env->observation_size() ||
      policy.net.output_dim() != env->num_actions()) {
    throw Error(ErrorCode::ShapeMismatch, "policy shape does not fit " + std::string(envs::to_string(env_kind)));
  }
  EvaluationReport report;
  report.env = env_kind;
  report.run = std::move(run);
  for (int i = 0; i < episodes; ++i) {
    EvaluatedEpisode ep;
    ep.seed = seed + static_cast<std::uint64_t>(i);
    auto obs = env->reset(ep.seed);
    std::vector<envs::StepResult> results;
    while (!env->done()) {
      auto r = env->step(rl::greedy_action(rl::policy_forward(policy, obs)));
      ep.env_return += r.r_env;
      obs = r.observation;
      results.push_back(std::move(r));
    }
    ep.metrics = envs::accumulate_metrics(env_kind, results);
    report.episodes.push_back(std::move(ep));
  }
  for (const auto& name : report_metrics(env_kind)) {
    std::vector<double> values;
    for (const auto& e : report.episodes) values.push_back(episode_value(e, name));
    report.summary.push_back({name, mean_ci(values)});
  }
  return report;
}

EvaluationReport evaluate(const std::filesystem::path& checkpoint, envs::EnvKind env,
                          envs::LayoutMode layout, int episodes, std::uint64_t seed,
                          std::string run) {
  auto probe = envs::make_environment(env, layout);
  const auto ckpt = rl::load_checkpoint_for(checkpoint, probe->observation_size(), probe->num_actions());
  return evaluate_policy(ckpt.policy, env, layout, episodes, seed, std::move(run));
}

void write_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  const auto metrics = report_metrics(report.env);
  CsvTable episodes;
  episodes.header = {"run", "episode", "seed"};
  episodes.header.insert(episodes.header.end(), metrics.begin(), metrics.end());
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    const auto& e = report.episodes[i];
    std::vector<std::string> row = {report.run, std::to_string(i), std::to_string(e.seed)};
    for (const auto& m : metrics) row.push_back(format_double(episode_value(e, m)));
    episodes.rows.push_back(std::move(row));
  }
  write_csv(episodes, dir / "eval_episodes.csv");

  CsvTable summary;
  summary.header = {"run", "metric", "n", "mean", "ci_low", "ci_high"};
  for (const auto& s : report.summary) {
    summary.rows.push_back({report.run, s.metric, std::to_string(s.stats.n), format_double(s.stats.mean),
                            format_double(s.stats.low()), format_double(s.stats.high())});
  }
  write_csv(summary, dir / "eval_summary.csv");
}

}  // namespace mrl::harness
