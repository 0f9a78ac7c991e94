#include "mrl/harness/ablation.hpp"

#include <map>

#include "mrl/error.hpp"

namespace mrl::harness {

namespace fs = std::filesystem;

namespace {

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = c == ',' ? ';' : ' ';
  }
  return text;
}

RunSpec base_for(const RunSpec& spec, const fs::path& root) {
  RunSpec b = spec;
  b.mode = RunMode::Base;
  b.cluster.reset();
  b.label = "base-s" + std::to_string(spec.training.seed);
  b.out_dir = (root / b.label).string();
  b.base_checkpoint.clear();
  b.provider = {};
  b.aggregation = {};
  return b;
}

}  // namespace

CsvTable AblationTable::long_format() const {
  CsvTable t;
  t.header = {"run",  "env",    "mode",   "cluster", "aggregation", "provider", "seed",
              "status", "metric", "n",      "mean",    "ci_low",      "ci_high"};
  for (const auto& r : results) {
    const auto& s = r.spec;
    const bool feedback = is_feedback_mode(s.mode);
    std::vector<std::string> key = {
        s.run_label(),
        std::string(envs::to_string(s.env)),
        std::string(to_string(s.mode)),
        s.cluster ? std::string(feedback::cluster_id(*s.cluster)) : "",
        s.mode == RunMode::FusedFeedback ? std::string(fusion::to_string(s.aggregation.tag)) : "",
        feedback ? feedback::provider_id(s.provider) : "",
        std::to_string(s.training.seed),
        sanitize(r.status)};
    if (!r.report) {
      auto row = key;
      row.insert(row.end(), {"", "", "", "", ""});
      t.rows.push_back(std::move(row));
      continue;
    }
    for (const auto& m : r.report->summary) {
      auto row = key;
      row.insert(row.end(), {m.metric, std::to_string(m.stats.n), format_double(m.stats.mean),
                             format_double(m.stats.low()), format_double(m.stats.high())});
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

std::vector<RunSpec> preset_suite(std::string_view preset, const RunSpec& base) {
  std::vector<RunSpec> out;
  auto variant = [&](RunMode mode) {
    RunSpec s = base;
    s.mode = mode;
    s.cluster.reset();
    s.label.clear();
    s.out_dir.clear();
    if (mode == RunMode::HumanFeedback) {
      s.provider.kind = feedback::ProviderKind::SyntheticHuman;
    } else if (base.provider.kind == feedback::ProviderKind::SyntheticHuman) {
      s.provider.kind = feedback::ProviderKind::RuleMock;
    }
    return s;
  };
  if (preset == "aggregation") {
    for (auto tag : {fusion::AggregationTag::BjsdDst, fusion::AggregationTag::MajorityVote,
                     fusion::AggregationTag::MaxBelief, fusion::AggregationTag::WeightedMean}) {
      auto s = variant(RunMode::FusedFeedback);
      s.aggregation = {tag, std::nullopt};
      out.push_back(std::move(s));
    }
  } else if (preset == "clusters") {
    for (auto c : feedback::kAllClusters) {
      auto s = variant(RunMode::SingleCluster);
      s.cluster = c;
      out.push_back(std::move(s));
    }
    out.push_back(variant(RunMode::MoralPrompt));
    out.push_back(variant(RunMode::FusedFeedback));
  } else if (preset == "modes") {
    for (auto m : {RunMode::Base, RunMode::BaseShaping, RunMode::FusedFeedback, RunMode::HumanFeedback}) {
      out.push_back(variant(m));
    }
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown ablation preset '" + std::string(preset) + "'");
  }
  return out;
}

std::vector<RunSpec> suite_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "ablation suite must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "base" && key != "runs" && key != "preset") {
      throw Error(ErrorCode::InvalidConfig, "unknown ablation key '" + key + "'");
    }
  }
  const nlohmann::json base = j.value("base", nlohmann::json::object());
  if (j.contains("preset") == j.contains("runs")) {
    throw Error(ErrorCode::InvalidConfig, "an ablation suite needs exactly one of 'runs' and 'preset'");
  }
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) throw Error(ErrorCode::InvalidConfig, "'preset' must be a string");
    return preset_suite(j["preset"].get<std::string>(), run_spec_from_json(base));
  }
  if (!j["runs"].is_array()) throw Error(ErrorCode::InvalidConfig, "'runs' must be an array");
  std::vector<RunSpec> out;
  for (const auto& run : j["runs"]) {
    nlohmann::json merged = base;
    merged.merge_patch(run);
    out.push_back(run_spec_from_json(merged));
  }
  return out;
}

AblationTable run_ablation_suite(const std::vector<RunSpec>& specs, const fs::path& root,
                                 const LogFn& log) {
  for (const auto& s : specs) {
    if (s.env != specs.front().env) {
      throw Error(ErrorCode::InvalidRunSpec, "ablation specs must share an environment");
    }
  }
  fs::create_directories(root);
  AblationTable table;
  std::map<std::string, std::string> bases;  // base run key -> checkpoint
  auto train_once = [&](const RunSpec& base) {
    const std::string key = base.out_dir + "\n" + to_json(base.training).dump();
    auto it = bases.find(key);
    if (it != bases.end()) return it->second;
    const auto artifacts = train_base(base, log);
    return bases.emplace(key, artifacts.checkpoint.string()).first->second;
  };

  for (const auto& input : specs) {
    AblationResult result;
    result.spec = input;
    if (result.spec.out_dir.empty()) result.spec.out_dir = (root / result.spec.run_label()).string();
    result.dir = result.spec.out_dir;
    try {
      RunSpec& s = result.spec;
      std::string checkpoint;
      if (!is_feedback_mode(s.mode)) {
        if (s.mode == RunMode::Base) {
          checkpoint = train_once(s);
        } else {
          checkpoint = train_base(s, log).checkpoint.string();
        }
      } else {
        if (s.base_checkpoint.empty()) s.base_checkpoint = train_once(base_for(s, root));
        checkpoint = finetune_feedback(s, {}, log).checkpoint.string();
      }
      auto report = evaluate(checkpoint, s.env, s.layout, s.eval_episodes, s.eval_seed, s.run_label());
      write_report(report, result.dir);
      result.report = std::move(report);
    } catch (const std::exception& e) {
      result.status = std::string("error: ") + e.what();
      if (log) log(result.spec.run_label() + ": " + result.status);
    }
    table.results.push_back(std::move(result));
  }
  write_csv(table.long_format(), root / "ablation.csv");
  return table;
}

}  // namespace mrl::harness
