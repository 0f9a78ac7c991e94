#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "mrl/harness/run_spec.hpp"
#include "mrl/rl/checkpoint.hpp"
#include "mrl/rl/rollout.hpp"

namespace mrl::harness {

// Files inside a run directory.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kCurveFile = "learning_curve.csv";
inline constexpr const char* kAuditFile = "audit.csv";
inline constexpr const char* kCacheFile = "beliefs.jsonl";
inline constexpr const char* kProgressFile = "progress.json";
inline constexpr const char* kFinetuneFile = "finetune.json";

using LogFn = std::function<void(const std::string&)>;

struct RunArtifacts {
  std::filesystem::path dir;
  std::filesystem::path checkpoint;
};

// Networks as initialized for a seed before any update; also the
// "untrained" policy for paired comparisons.
rl::Checkpoint initial_models(const RunSpec& spec);

// Base or BaseShaping: PPO for training.total_steps from freshly
// initialized networks. Writes config.json, learning_curve.csv and
// model.json to spec.out_dir.
RunArtifacts train_base(const RunSpec& spec, const LogFn& log = {});

struct FinetuneOptions {
  bool resume = false;
};

// Feedback modes: copies the base checkpoint into a frozen reference and a
// trainable policy, then runs PPO for training.finetune_steps with
// r_env = -kl_coeff·KL(π||π_base) and r_shaping = the shaping reward of the
// taken action. Every shaping reward is logged to audit.csv. Progress is
// saved after each update; after a failure (for example
// ClusterQueryFailed) a run with `resume` continues from the last saved
// update and reproduces the uninterrupted run. Throws AuditMismatch if the
// base checkpoint changes on disk meanwhile.
RunArtifacts finetune_feedback(const RunSpec& spec, const FinetuneOptions& options = {},
                               const LogFn& log = {});

struct AuditSummary {
  std::size_t rows = 0;
  std::size_t states = 0;
};

// Recomputes every audited shaping reward from the cached belief rows and
// the recorded aggregation. Throws AuditMismatch on the first difference
// or missing cache entry.
AuditSummary replay_audit(const std::filesystem::path& run_dir);

// Mean KL(policy || reference) over `states` observations visited by
// sampling `policy` from episodes seeded seed, seed+1, ...
double mean_policy_kl(const rl::PolicyModel& policy, const rl::PolicyModel& reference,
                      envs::EnvKind env, envs::LayoutMode layout, int states, std::uint64_t seed);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Reads config.json from a run directory.
RunSpec load_run_spec(const std::filesystem::path& run_dir);

}  // namespace mrl::harness
