#include "mrl/harness/training.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>

#include "mrl/error.hpp"
#include "mrl/feedback/collector.hpp"
#include "mrl/harness/csv.hpp"

namespace mrl::harness {

namespace fs = std::filesystem;

namespace {

constexpr int kProgressVersion = 1;

std::vector<std::string> curve_metrics(envs::EnvKind kind) {
  std::vector<std::string> out = {"return", "env_return"};
  const auto& names = envs::metric_names(kind);
  out.insert(out.end(), names.begin(), names.end());
  out.push_back("episode_length");
  return out;
}

double curve_value(const rl::CompletedEpisode& e, const std::string& metric) {
  if (metric == "return") return e.episode_return;
  if (metric == "env_return") return e.env_return;
  return envs::metric_value(e.metrics, metric);
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + "\n";
}

std::string curve_header(envs::EnvKind kind) {
  std::vector<std::string> h = {"run",      "mode",        "update",     "steps",   "episodes",
                                "learning_rate", "policy_loss", "value_loss", "entropy", "approx_kl",
                                "clip_fraction", "reference_kl"};
  for (const auto& m : curve_metrics(kind)) {
    h.push_back(m + "_mean");
    h.push_back(m + "_ci");
  }
  return join(h);
}

std::string curve_row(const RunSpec& spec, const rl::UpdateLog& log) {
  std::vector<std::string> row = {spec.run_label(),
                                  std::string(to_string(spec.mode)),
                                  std::to_string(log.update),
                                  std::to_string(log.steps),
                                  std::to_string(log.episodes.size()),
                                  format_double(log.learning_rate),
                                  format_double(log.stats.policy_loss),
                                  format_double(log.stats.value_loss),
                                  format_double(log.stats.entropy),
                                  format_double(log.stats.approx_kl),
                                  format_double(log.stats.clip_fraction),
                                  format_double(log.stats.reference_kl)};
  for (const auto& m : curve_metrics(spec.env)) {
    if (log.episodes.empty()) {
      row.emplace_back();
      row.emplace_back();
      continue;
    }
    std::vector<double> values;
    for (const auto& e : log.episodes) values.push_back(curve_value(e, m));
    const auto ci = mean_ci(values);
    row.push_back(format_double(ci.mean));
    row.push_back(format_double(ci.half_width));
  }
  return join(row);
}

// Appends rows and flushes them, so the file on disk always ends on a
// complete update.
class AppendLog {
 public:
  AppendLog(const fs::path& path, bool fresh, const std::string& header) : path_(path) {
    if (fresh) write_file(path, header);
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error(ErrorCode::Io, "cannot append to " + path.string());
  }
  void append(const std::string& text) {
    out_ << text;
    out_.flush();
    if (!out_) throw Error(ErrorCode::Io, "write failed for " + path_.string());
  }
  std::uintmax_t size() const { return fs::file_size(path_); }

 private:
  fs::path path_;
  std::ofstream out_;
};

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  write_file(tmp, content);
  fs::rename(tmp, path);
}

std::string progress_message(const RunSpec& spec, const rl::UpdateLog& log, int total) {
  std::string msg = spec.run_label() + ": update " + std::to_string(log.update) + "/" +
                    std::to_string(total) + ", " + std::to_string(log.steps) + " steps";
  if (!log.episodes.empty()) {
    std::vector<double> returns;
    for (const auto& e : log.episodes) returns.push_back(e.env_return);
    char buf[64];
    std::snprintf(buf, sizeof buf, ", env return %.3f over %zu episodes", mean_ci(returns).mean,
                  returns.size());
    msg += buf;
  }
  return msg;
}

int update_count(const rl::TrainingConfig& c, long steps) {
  return static_cast<int>((steps + c.rollout_length - 1) / c.rollout_length);
}

fs::path require_out_dir(const RunSpec& spec) {
  if (spec.out_dir.empty()) throw Error(ErrorCode::InvalidRunSpec, "the run needs an output directory");
  fs::path dir = spec.out_dir;
  fs::create_directories(dir);
  return dir;
}

fs::path cache_path_for(const RunSpec& spec, const fs::path& dir) {
  return spec.provider.cache_path.empty() ? dir / kCacheFile : fs::path(spec.provider.cache_path);
}

nlohmann::json progress_to_json(const rl::PpoRun& run, const rl::RolloutCursor& cursor,
                                const std::string& base_hash, std::uintmax_t audit_bytes,
                                std::uintmax_t curve_bytes) {
  return {{"version", kProgressVersion},
          {"base_sha256", base_hash},
          {"updates_done", run.updates_done},
          {"policy", rl::mlp_to_json(run.policy.net, run.policy.input_scale)},
          {"value", rl::mlp_to_json(run.value.net, run.value.input_scale)},
          {"optimizer",
           {{"policy", rl::adam_to_json(run.optimizer.policy)},
            {"value", rl::adam_to_json(run.optimizer.value)}}},
          {"rng", run.rng.state()},
          {"scaler", run.scaler.to_json()},
          {"cursor", cursor.snapshot()},
          {"audit_bytes", audit_bytes},
          {"curve_bytes", curve_bytes}};
}

}  // namespace

rl::Checkpoint initial_models(const RunSpec& spec) {
  auto env = envs::make_environment(spec.env, spec.layout);
  Rng rng(spec.training.seed);
  rl::Checkpoint c;
  c.env = std::string(envs::to_string(spec.env));
  c.policy = rl::make_policy(env->observation_size(), env->num_actions(), spec.training.hidden_sizes,
                             env->observation_scale(), rng);
  c.value = rl::make_value(env->observation_size(), spec.training.hidden_sizes,
                           env->observation_scale(), rng);
  c.config = spec.training;
  return c;
}

RunArtifacts train_base(const RunSpec& spec, const LogFn& log) {
  spec.validate();
  if (is_feedback_mode(spec.mode)) {
    throw Error(ErrorCode::InvalidRunSpec,
                std::string(to_string(spec.mode)) + " mode is trained by fine-tuning a base checkpoint");
  }
  const fs::path dir = require_out_dir(spec);
  write_file(dir / kConfigFile, to_json(spec).dump(2) + "\n");

  auto env = envs::make_environment(spec.env, spec.layout);
  auto init = initial_models(spec);
  rl::PpoRun run{std::move(init.policy), std::move(init.value), {}, Rng(spec.training.seed + 1), 0, {}};
  rl::RolloutCursor cursor(env->clone(), training_episode_seed(spec.training.seed));

  rl::RewardSource source;
  source.mode = spec.mode == RunMode::BaseShaping ? rl::RewardMode::EnvPlusHandcrafted
                                                  : rl::RewardMode::EnvOnly;
  source.shaping_coeff = spec.shaping_coeff();

  AppendLog curve(dir / kCurveFile, true, curve_header(spec.env));
  const int total = update_count(spec.training, spec.training.total_steps);
  rl::run_ppo(run, cursor, spec.training, spec.training.total_steps, source,
              [&](const rl::UpdateLog& l) {
                curve.append(curve_row(spec, l));
                if (log && (l.update % 10 == 0 || l.update == total)) log(progress_message(spec, l, total));
              });

  rl::Checkpoint ckpt{std::string(envs::to_string(spec.env)), run.policy, run.value, spec.training};
  rl::save_checkpoint(ckpt, dir / kModelFile);
  return {dir, dir / kModelFile};
}

RunArtifacts finetune_feedback(const RunSpec& spec, const FinetuneOptions& options,
                               const LogFn& log) {
  spec.validate();
  if (!is_feedback_mode(spec.mode)) {
    throw Error(ErrorCode::InvalidRunSpec,
                std::string(to_string(spec.mode)) + " mode does not use belief feedback");
  }
  if (spec.base_checkpoint.empty()) {
    throw Error(ErrorCode::InvalidRunSpec, "fine-tuning needs a base checkpoint");
  }
  const fs::path dir = require_out_dir(spec);
  const fs::path base = spec.base_checkpoint;
  if (!fs::is_regular_file(base)) throw Error(ErrorCode::Io, "base checkpoint not found: " + base.string());
  const std::string base_hash = sha256_file(base);

  auto env = envs::make_environment(spec.env, spec.layout);
  const auto ckpt = rl::load_checkpoint_for(base, env->observation_size(), env->num_actions());

  const std::string config_text = to_json(spec).dump(2) + "\n";
  const fs::path progress_path = dir / kProgressFile;
  const bool resuming = options.resume && fs::exists(progress_path);
  if (options.resume && !resuming && fs::exists(dir / kModelFile) && fs::exists(dir / kFinetuneFile)) {
    if (log) log(spec.run_label() + ": already complete");
    return {dir, dir / kModelFile};
  }
  if (resuming) {
    if (read_file(dir / kConfigFile) != config_text) {
      throw Error(ErrorCode::InvalidRunSpec, "cannot resume " + dir.string() + " with a different configuration");
    }
  } else {
    write_file(dir / kConfigFile, config_text);
  }

  auto provider = feedback::make_provider(spec.provider);
  auto cache = std::make_shared<feedback::BeliefCache>(cache_path_for(spec, dir));
  feedback::TemplateStore templates = spec.provider.template_dir.empty()
                                          ? feedback::TemplateStore()
                                          : feedback::TemplateStore(spec.provider.template_dir);
  feedback::BeliefCollector collector(agents_for(spec, provider), std::move(templates), cache,
                                      spec.provider.token_budget);

  const rl::PolicyModel reference = ckpt.policy;
  rl::PpoRun run{ckpt.policy, ckpt.value, {}, Rng(spec.training.seed + 2), 0, {}};
  std::optional<rl::RolloutCursor> cursor;
  if (resuming) {
    nlohmann::json p;
    try {
      p = nlohmann::json::parse(read_file(progress_path));
      if (p.at("version").get<int>() != kProgressVersion) throw Error(ErrorCode::CheckpointFormat, "unsupported progress version");
      if (p.at("base_sha256").get<std::string>() != base_hash) {
        throw Error(ErrorCode::AuditMismatch, "base checkpoint changed since the run started");
      }
      run.updates_done = p.at("updates_done").get<int>();
      run.policy.net = rl::mlp_from_json(p.at("policy"), run.policy.input_scale);
      run.value.net = rl::mlp_from_json(p.at("value"), run.value.input_scale);
      run.optimizer.policy = rl::adam_from_json(p.at("optimizer").at("policy"));
      run.optimizer.value = rl::adam_from_json(p.at("optimizer").at("value"));
      run.rng.set_state(p.at("rng").get<std::string>());
      run.scaler = rl::RewardScaler::from_json(p.at("scaler"));
      cursor.emplace(env->clone(), p.at("cursor"));
      fs::resize_file(dir / kAuditFile, p.at("audit_bytes").get<std::uintmax_t>());
      fs::resize_file(dir / kCurveFile, p.at("curve_bytes").get<std::uintmax_t>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CheckpointFormat, std::string("progress file: ") + e.what());
    } catch (const fs::filesystem_error& e) {
      throw Error(ErrorCode::Io, std::string("resuming: ") + e.what());
    }
    if (log) log(spec.run_label() + ": resuming after update " + std::to_string(run.updates_done));
  } else {
    cursor.emplace(env->clone(), finetune_episode_seed(spec.training.seed));
  }

  AppendLog audit(dir / kAuditFile, !resuming, "step,state_digest,action,r_shaping\n");
  AppendLog curve(dir / kCurveFile, !resuming, curve_header(spec.env));

  std::map<std::string, std::vector<double>> rewards_by_state;
  std::string pending;
  rl::RewardSource source;
  source.mode = rl::RewardMode::Feedback;
  source.shaping_coeff = spec.shaping_coeff();
  source.kl_coeff = spec.training.kl_coeff;
  source.reference = &reference;
  source.feedback = [&](const envs::Environment& e, int action) {
    const std::string digest = collector.state_digest(e);
    auto it = rewards_by_state.find(digest);
    if (it == rewards_by_state.end()) {
      const auto collected = collector.collect(e);
      it = rewards_by_state.emplace(digest, shaping_rewards(collected.matrix, spec.aggregation)).first;
    }
    const double r = it->second.at(static_cast<std::size_t>(action));
    pending += std::to_string(cursor->total_steps()) + "," + digest + "," + std::to_string(action) + "," +
               format_double(r) + "\n";
    return r;
  };

  const int total = update_count(spec.training, spec.training.finetune_steps);
  try {
    rl::run_ppo(run, *cursor, spec.training, spec.training.finetune_steps, source,
                [&](const rl::UpdateLog& l) {
                  audit.append(pending);
                  pending.clear();
                  curve.append(curve_row(spec, l));
                  write_atomically(progress_path,
                                   progress_to_json(run, *cursor, base_hash, audit.size(), curve.size()).dump() + "\n");
                  if (log && (l.update % 10 == 0 || l.update == total)) log(progress_message(spec, l, total));
                });
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ClusterQueryFailed) throw;
    throw Error(ErrorCode::ClusterQueryFailed,
                std::string(e.what()) + " (progress kept after update " + std::to_string(run.updates_done) +
                    "; rerun with resume to continue)",
                e.detail());
  }

  rl::Checkpoint out{std::string(envs::to_string(spec.env)), run.policy, run.value, spec.training};
  rl::save_checkpoint(out, dir / kModelFile);
  const nlohmann::json summary = {{"base_checkpoint", base.string()},
                                  {"base_sha256", base_hash},
                                  {"updates", run.updates_done},
                                  {"steps", cursor->total_steps()},
                                  {"belief_cache", cache_path_for(spec, dir).string()},
                                  {"states_labelled", rewards_by_state.size()}};
  write_file(dir / kFinetuneFile, summary.dump(2) + "\n");
  fs::remove(progress_path);

  if (sha256_file(base) != base_hash) {
    throw Error(ErrorCode::AuditMismatch, "base checkpoint changed during fine-tuning: " + base.string());
  }
  return {dir, dir / kModelFile};
}

AuditSummary replay_audit(const fs::path& run_dir) {
  const RunSpec spec = load_run_spec(run_dir);
  if (!is_feedback_mode(spec.mode)) {
    throw Error(ErrorCode::InvalidRunSpec, run_dir.string() + " is not a feedback run");
  }
  feedback::BeliefCache cache(cache_path_for(spec, run_dir));
  const auto labels = agent_labels(spec);
  const std::string provider = feedback::provider_id(spec.provider);
  const std::string env = feedback::env_id(spec.env);

  const auto audit = read_csv(run_dir / kAuditFile);
  const auto c_step = audit.column("step");
  const auto c_digest = audit.column("state_digest");
  const auto c_action = audit.column("action");
  const auto c_reward = audit.column("r_shaping");

  std::map<std::string, std::vector<double>> rewards_by_state;
  for (std::size_t i = 0; i < audit.rows.size(); ++i) {
    const auto& row = audit.rows[i];
    const std::string& digest = row[c_digest];
    auto it = rewards_by_state.find(digest);
    if (it == rewards_by_state.end()) {
      std::vector<fusion::BasicBeliefAssignment> rows;
      for (const auto& label : labels) {
        const auto hit = cache.lookup({env, digest, label, provider});
        if (!hit) {
          throw Error(ErrorCode::AuditMismatch,
                      "step " + row[c_step] + ": no cached beliefs for agent '" + label + "' at state " + digest);
        }
        rows.emplace_back(hit->masses);
      }
      it = rewards_by_state
               .emplace(digest, shaping_rewards(fusion::BeliefMatrix(std::move(rows), labels), spec.aggregation))
               .first;
    }
    const auto action = static_cast<std::size_t>(audit.number(i, c_action));
    const double logged = audit.number(i, c_reward);
    if (action >= it->second.size() || it->second[action] != logged) {
      throw Error(ErrorCode::AuditMismatch, "step " + row[c_step] + ": logged r_shaping " + row[c_reward] +
                                                " does not match the recomputed value");
    }
  }
  return {audit.rows.size(), rewards_by_state.size()};
}

double mean_policy_kl(const rl::PolicyModel& policy, const rl::PolicyModel& reference,
                      envs::EnvKind env_kind, envs::LayoutMode layout, int states, std::uint64_t seed) {
  if (states < 1) throw Error(ErrorCode::InvalidConfig, "KL probe needs at least one state");
  auto env = envs::make_environment(env_kind, layout);
  Rng rng(seed);
  std::uint64_t episode = seed;
  auto obs = env->reset(episode++);
  double sum = 0.0;
  for (int i = 0; i < states; ++i) {
    const auto p = rl::policy_forward(policy, obs);
    const auto q = rl::policy_forward(reference, obs);
    sum += rl::kl_categorical(p.probs, q.probs);
    auto result = env->step(rl::sample_action(p, rng).action);
    obs = env->done() ? env->reset(episode++) : std::move(result.observation);
  }
  return sum / states;
}

std::string sha256_file(const fs::path& path) {
  const std::string bytes = read_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw Error(ErrorCode::Io, "SHA-256 failed for " + path.string());
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

RunSpec load_run_spec(const fs::path& run_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(run_dir / kConfigFile));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, (run_dir / kConfigFile).string() + ": " + e.what());
  }
  return run_spec_from_json(j);
}

}  // namespace mrl::harness
