#include "mrl/harness/run_spec.hpp"

#include "mrl/error.hpp"

namespace mrl::harness {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidRunSpec, what);
}

std::string_view layout_name(envs::LayoutMode mode) {
  return mode == envs::LayoutMode::Canonical ? "canonical" : "randomized";
}

envs::LayoutMode parse_layout(std::string_view text) {
  if (text == "canonical") return envs::LayoutMode::Canonical;
  if (text == "randomized" || text == "random") return envs::LayoutMode::Randomized;
  throw Error(ErrorCode::InvalidConfig, "unknown layout '" + std::string(text) + "'");
}

template <typename T>
T get(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Base: return "base";
    case RunMode::BaseShaping: return "shaping";
    case RunMode::FusedFeedback: return "feedback";
    case RunMode::HumanFeedback: return "human";
    case RunMode::SingleCluster: return "single-cluster";
    case RunMode::MoralPrompt: return "moral-prompt";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view text) {
  if (text == "base") return RunMode::Base;
  if (text == "shaping" || text == "base-shaping" || text == "handcrafted") return RunMode::BaseShaping;
  if (text == "feedback" || text == "fused") return RunMode::FusedFeedback;
  if (text == "human") return RunMode::HumanFeedback;
  if (text == "single-cluster" || text == "cluster") return RunMode::SingleCluster;
  if (text == "moral-prompt" || text == "moral") return RunMode::MoralPrompt;
  throw Error(ErrorCode::InvalidConfig, "unknown mode '" + std::string(text) + "'");
}

bool is_feedback_mode(RunMode mode) {
  return mode != RunMode::Base && mode != RunMode::BaseShaping;
}

std::uint64_t training_episode_seed(std::uint64_t seed) { return seed * 1000000; }
std::uint64_t finetune_episode_seed(std::uint64_t seed) { return seed * 1000000 + 500000; }

void RunSpec::validate() const {
  try {
    training.validate();
    provider.validate();
    aggregation.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidRunSpec, e.what());
  }
  require(eval_episodes >= 1, "eval_episodes must be at least 1");
  require(mode == RunMode::SingleCluster || !cluster.has_value(),
          "a cluster is only meaningful in single-cluster mode");
  require(mode != RunMode::SingleCluster || cluster.has_value(), "single-cluster mode needs a cluster");
  require(layout == envs::LayoutMode::Canonical || env == envs::EnvKind::FindMilk,
          "layouts apply to find-milk only");
  const bool human = provider.kind == feedback::ProviderKind::SyntheticHuman;
  switch (mode) {
    case RunMode::HumanFeedback:
      require(human, "human mode uses the synthetic human provider");
      break;
    case RunMode::FusedFeedback:
    case RunMode::SingleCluster:
    case RunMode::MoralPrompt:
      require(!human, std::string(to_string(mode)) + " mode needs a model provider (mock or llm)");
      break;
    default:
      break;
  }
}

double RunSpec::shaping_coeff() const {
  if (mode == RunMode::Base) return 0.0;
  if (mode == RunMode::BaseShaping) return 1.0;
  return training.shaping_coeff;
}

std::string RunSpec::run_label() const {
  if (!label.empty()) return label;
  std::string out(to_string(mode));
  if (cluster) out += "-" + std::string(feedback::cluster_id(*cluster));
  if (mode == RunMode::FusedFeedback) out += "-" + std::string(fusion::to_string(aggregation.tag));
  if (is_feedback_mode(mode)) {
    std::string id = feedback::provider_id(provider);
    for (char& c : id) {
      if (c == ':' || c == '/') c = '-';
    }
    out += "-" + id;
  }
  return out + "-s" + std::to_string(training.seed);
}

RunSpec default_run_spec(envs::EnvKind env) {
  RunSpec spec;
  spec.env = env;
  spec.training = rl::default_config(env == envs::EnvKind::Driving);
  return spec;
}

nlohmann::json to_json(const RunSpec& spec) {
  nlohmann::json agg = std::string(fusion::to_string(spec.aggregation.tag));
  nlohmann::json j = {
      {"env", std::string(envs::to_string(spec.env))},
      {"layout", std::string(layout_name(spec.layout))},
      {"mode", std::string(to_string(spec.mode))},
      {"aggregation", agg},
      {"provider", feedback::to_json(spec.provider)},
      {"training", rl::to_json(spec.training)},
      {"out", spec.out_dir},
      {"base_checkpoint", spec.base_checkpoint},
      {"label", spec.run_label()},
      {"eval", {{"episodes", spec.eval_episodes}, {"seed", spec.eval_seed}}},
  };
  if (spec.cluster) j["cluster"] = std::string(feedback::cluster_id(*spec.cluster));
  if (spec.aggregation.weights) j["aggregation_weights"] = *spec.aggregation.weights;
  return j;
}

RunSpec run_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "run spec must be an object");
  const auto env =
      j.contains("env") ? envs::parse_env_kind(get<std::string>(j, "env")) : envs::EnvKind::FindMilk;
  RunSpec spec = default_run_spec(env);
  bool provider_kind_given = false;
  for (const auto& [key, value] : j.items()) {
    if (key == "env") continue;
    if (key == "layout") spec.layout = parse_layout(get<std::string>(j, "layout"));
    else if (key == "mode") spec.mode = parse_run_mode(get<std::string>(j, "mode"));
    else if (key == "cluster") {
      if (!value.is_null()) spec.cluster = feedback::parse_cluster(get<std::string>(j, "cluster"));
    } else if (key == "aggregation") {
      spec.aggregation.tag = fusion::parse_aggregation_tag(get<std::string>(j, "aggregation"));
    } else if (key == "aggregation_weights") {
      if (!value.is_null()) spec.aggregation.weights = get<std::vector<double>>(j, "aggregation_weights");
    } else if (key == "provider") {
      spec.provider = feedback::provider_config_from_json(value, spec.provider);
      provider_kind_given = value.is_object() && value.contains("kind");
    } else if (key == "training") {
      spec.training = rl::config_from_json(value, spec.training);
    } else if (key == "out") spec.out_dir = get<std::string>(j, "out");
    else if (key == "base_checkpoint") spec.base_checkpoint = get<std::string>(j, "base_checkpoint");
    else if (key == "label") spec.label = get<std::string>(j, "label");
    else if (key == "eval") {
      if (!value.is_object()) throw Error(ErrorCode::InvalidConfig, "'eval' must be an object");
      for (const auto& [ek, ev] : value.items()) {
        if (ek == "episodes") spec.eval_episodes = get<int>(value, "episodes");
        else if (ek == "seed") spec.eval_seed = get<std::uint64_t>(value, "seed");
        else throw Error(ErrorCode::InvalidConfig, "unknown key 'eval." + ek + "'");
      }
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
    }
  }
  if (spec.mode == RunMode::HumanFeedback && !provider_kind_given) {
    spec.provider.kind = feedback::ProviderKind::SyntheticHuman;
  }
  return spec;
}

std::vector<feedback::BeliefAgent> agents_for(const RunSpec& spec,
                                              std::shared_ptr<feedback::BeliefProvider> provider) {
  using feedback::Credence;
  switch (spec.mode) {
    case RunMode::FusedFeedback:
      return feedback::cluster_agents(std::move(provider));
    case RunMode::SingleCluster:
      return {{std::string(feedback::cluster_id(*spec.cluster)), Credence::single(*spec.cluster),
               std::move(provider)}};
    case RunMode::MoralPrompt:
      return {{"moral", Credence::moral_agent(), std::move(provider)}};
    case RunMode::HumanFeedback:
      return {{"human", Credence::moral_agent(), std::move(provider)}};
    default:
      throw Error(ErrorCode::InvalidRunSpec,
                  std::string(to_string(spec.mode)) + " mode has no belief agents");
  }
}

std::vector<std::string> agent_labels(const RunSpec& spec) {
  std::vector<std::string> out;
  for (const auto& a : agents_for(spec, nullptr)) out.push_back(a.label);
  return out;
}

std::vector<double> shaping_rewards(const fusion::BeliefMatrix& matrix,
                                    const fusion::AggregationMethod& method) {
  if (matrix.rows() == 1) return matrix.row(0).values();
  return fusion::aggregate(matrix, method);
}

}  // namespace mrl::harness
