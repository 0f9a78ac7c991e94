#include "mrl/cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "mrl/cli/plots.hpp"
#include "mrl/error.hpp"
#include "mrl/feedback/prompts.hpp"
#include "mrl/feedback/templates.hpp"
#include "mrl/fusion/aggregation.hpp"
#include "mrl/fusion/fusion.hpp"
#include "mrl/harness/ablation.hpp"
#include "mrl/harness/csv.hpp"
#include "mrl/harness/evaluation.hpp"
#include "mrl/harness/run_spec.hpp"
#include "mrl/harness/training.hpp"

namespace mrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSynopsis =
    "usage: mrl <command> [options]\n"
    "commands: train, finetune, eval, fuse, prompt, plot, ablate, audit\n"
    "run 'mrl <command> --help' for the options of a command\n";

// Bad command-line input detected after parsing; exits with 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Where --steps lands in the training config.
enum class StepsKey { Total, Finetune };

struct RunFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, CLI::Option*> opts;
  std::string env, layout, mode, aggregation, provider, model, endpoint, cluster, out, base, label;
  std::uint64_t seed = 0;
  long steps = 0;
  long finetune_steps = 0;
  int episodes = 0;
  std::uint64_t eval_seed = 0;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_run_flags(CLI::App* app, RunFlags& f, bool with_finetune_steps) {
  app->add_option("--config", f.config_file, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--set", f.sets, "override a dotted config key: key=value")->allow_extra_args(false);
  f.opts["env"] = app->add_option("--env", f.env, "find-milk or driving");
  f.opts["layout"] = app->add_option("--layout", f.layout, "canonical or randomized (find-milk)");
  f.opts["mode"] = app->add_option("--mode", f.mode,
                                   "base, shaping, feedback, human, single-cluster or moral-prompt");
  f.opts["aggregation"] = app->add_option("--aggregation", f.aggregation, "bjsd-dst, vote, max or mean");
  f.opts["provider"] = app->add_option("--provider", f.provider, "mock, human or llm");
  f.opts["model"] = app->add_option("--model", f.model, "model name for the llm provider");
  f.opts["endpoint"] = app->add_option("--endpoint", f.endpoint, "API base URL for the llm provider");
  f.opts["cluster"] = app->add_option("--cluster", f.cluster, "moral cluster for single-cluster runs");
  f.opts["seed"] = app->add_option("--seed", f.seed, "training seed");
  f.opts["steps"] = app->add_option("--steps", f.steps, "environment steps");
  if (with_finetune_steps) {
    f.opts["finetune-steps"] = app->add_option("--finetune-steps", f.finetune_steps, "fine-tuning steps");
  }
  f.opts["out"] = app->add_option("--out", f.out, "output directory");
  f.opts["base"] = app->add_option("--base", f.base, "base checkpoint or base run directory");
  f.opts["label"] = app->add_option("--label", f.label, "run label");
  f.opts["episodes"] = app->add_option("--episodes", f.episodes, "evaluation episodes");
  f.opts["eval-seed"] = app->add_option("--eval-seed", f.eval_seed, "first evaluation episode seed");
}

json read_json_file(const fs::path& path) {
  const std::string text = harness::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

// A base given as a run directory means its model file.
std::string checkpoint_path(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / harness::kModelFile).string();
  return path;
}

// defaults < config file < --set < explicit flags. Secrets never enter
// here; the live provider reads them from the environment.
void layer_flags(json& j, const RunFlags& f, StepsKey steps_key) {
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    apply_override(j, s.substr(0, eq), s.substr(eq + 1));
  }
  auto object = [&](const char* key) -> json& {
    if (!j.contains(key) || !j[key].is_object()) j[key] = json::object();
    return j[key];
  };
  if (f.given("env")) j["env"] = f.env;
  if (f.given("layout")) j["layout"] = f.layout;
  if (f.given("mode")) j["mode"] = f.mode;
  if (f.given("aggregation")) j["aggregation"] = f.aggregation;
  if (f.given("cluster")) j["cluster"] = f.cluster;
  if (f.given("provider")) object("provider")["kind"] = f.provider;
  if (f.given("model")) object("provider")["model"] = f.model;
  if (f.given("endpoint")) object("provider")["endpoint"] = f.endpoint;
  if (f.given("seed")) object("training")["seed"] = f.seed;
  if (f.given("steps")) {
    object("training")[steps_key == StepsKey::Total ? "total_steps" : "finetune_steps"] = f.steps;
  }
  if (f.given("finetune-steps")) object("training")["finetune_steps"] = f.finetune_steps;
  if (f.given("out")) j["out"] = f.out;
  if (f.given("base")) j["base_checkpoint"] = checkpoint_path(f.base);
  if (f.given("label")) j["label"] = f.label;
  if (f.given("episodes")) object("eval")["episodes"] = f.episodes;
  if (f.given("eval-seed")) object("eval")["seed"] = f.eval_seed;
}

// A base run directory contributes its environment, layout and training
// config as the lowest layer.
json inherited_from_base(const RunFlags& f) {
  if (!f.given("base") || !fs::exists(fs::path(f.base) / harness::kConfigFile)) return json::object();
  const json base = harness::to_json(harness::load_run_spec(f.base));
  return {{"env", base["env"]}, {"layout", base["layout"]}, {"training", base["training"]}};
}

harness::RunSpec resolve_spec(const RunFlags& f, StepsKey steps_key, const char* default_mode) {
  json file = f.config_file.empty() ? json::object() : read_json_file(f.config_file);
  if (!file.is_object()) throw Error(ErrorCode::InvalidConfig, "config file must hold a JSON object");
  json j = inherited_from_base(f);
  j.merge_patch(file);
  layer_flags(j, f, steps_key);
  if (!j.contains("mode")) j["mode"] = default_mode;
  harness::RunSpec spec = harness::run_spec_from_json(j);
  if (spec.out_dir.empty()) spec.out_dir = (fs::path("runs") / spec.run_label()).string();
  spec.validate();
  return spec;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_summary(const harness::EvaluationReport& report, std::ostream& out) {
  std::size_t width = 6;
  for (const auto& m : report.summary) width = std::max(width, m.metric.size());
  out << "run " << report.run << " (" << report.episodes.size() << " episodes)\n";
  for (const auto& m : report.summary) {
    out << "  " << m.metric << std::string(width - m.metric.size() + 2, ' ') << fixed(m.stats.mean)
        << "  95% CI [" << fixed(m.stats.low()) << ", " << fixed(m.stats.high()) << "]\n";
  }
}

harness::LogFn logger(std::ostream& err) {
  return [&err](const std::string& line) { err << line << '\n' << std::flush; };
}

// Subcommand bodies -------------------------------------------------------

int cmd_train(const RunFlags& f, bool evaluate_after, std::ostream& out, std::ostream& err) {
  const auto spec = resolve_spec(f, StepsKey::Total, "base");
  if (harness::is_feedback_mode(spec.mode)) {
    throw Error(ErrorCode::InvalidRunSpec, "train runs base or shaping modes; use finetune for '" +
                                               std::string(harness::to_string(spec.mode)) + "'");
  }
  const auto artifacts = harness::train_base(spec, logger(err));
  out << "run " << spec.run_label() << '\n'
      << "checkpoint " << artifacts.checkpoint.string() << '\n'
      << "curve " << (artifacts.dir / harness::kCurveFile).string() << '\n';
  if (evaluate_after) {
    const auto report = harness::evaluate(artifacts.checkpoint, spec.env, spec.layout, spec.eval_episodes,
                                          spec.eval_seed, spec.run_label());
    harness::write_report(report, artifacts.dir);
    print_summary(report, out);
  }
  return kExitOk;
}

int cmd_finetune(const RunFlags& f, bool resume, bool evaluate_after, std::ostream& out,
                 std::ostream& err) {
  const auto spec = resolve_spec(f, StepsKey::Finetune, "feedback");
  const auto artifacts = harness::finetune_feedback(spec, {resume}, logger(err));
  out << "run " << spec.run_label() << '\n'
      << "checkpoint " << artifacts.checkpoint.string() << '\n'
      << "curve " << (artifacts.dir / harness::kCurveFile).string() << '\n'
      << "audit " << (artifacts.dir / harness::kAuditFile).string() << '\n';
  if (evaluate_after) {
    const auto report = harness::evaluate(artifacts.checkpoint, spec.env, spec.layout, spec.eval_episodes,
                                          spec.eval_seed, spec.run_label());
    harness::write_report(report, artifacts.dir);
    print_summary(report, out);
  }
  return kExitOk;
}

struct EvalFlags {
  std::string run, checkpoint, env = "find-milk", layout = "canonical", out, label;
  int episodes = harness::kDefaultEvalEpisodes;
  std::uint64_t seed = harness::kDefaultEvalSeed;
  CLI::Option* run_opt = nullptr;
  CLI::Option* checkpoint_opt = nullptr;
  CLI::Option* env_opt = nullptr;
  CLI::Option* layout_opt = nullptr;
  CLI::Option* episodes_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  if ((f.run_opt->count() > 0) == (f.checkpoint_opt->count() > 0)) {
    throw UsageError("eval needs exactly one of --run and --checkpoint");
  }
  json snapshot;
  fs::path checkpoint;
  fs::path dir;
  std::string label = f.label;
  envs::EnvKind env;
  envs::LayoutMode layout;
  int episodes = f.episodes;
  std::uint64_t seed = f.seed;
  if (f.run_opt->count() > 0) {
    const auto spec = harness::load_run_spec(f.run);
    checkpoint = fs::path(f.run) / harness::kModelFile;
    dir = f.run;
    env = spec.env;
    layout = spec.layout;
    if (f.env_opt->count() > 0 && envs::parse_env_kind(f.env) != env) {
      throw Error(ErrorCode::InvalidConfig, "--env disagrees with the run's environment");
    }
    if (f.layout_opt->count() > 0) layout = harness::run_spec_from_json({{"env", f.env}, {"layout", f.layout}}).layout;
    if (f.episodes_opt->count() == 0) episodes = spec.eval_episodes;
    if (f.seed_opt->count() == 0) seed = spec.eval_seed;
    if (label.empty()) label = spec.run_label();
  } else {
    checkpoint = f.checkpoint;
    dir = checkpoint.parent_path();
    const auto spec = harness::run_spec_from_json({{"env", f.env}, {"layout", f.layout}});
    env = spec.env;
    layout = spec.layout;
    if (label.empty()) label = checkpoint.stem().string();
  }
  if (!f.out.empty()) dir = f.out;
  if (dir.empty()) dir = ".";

  snapshot = {{"checkpoint", checkpoint.string()},
              {"checkpoint_sha256", harness::sha256_file(checkpoint)},
              {"env", std::string(envs::to_string(env))},
              {"layout", layout == envs::LayoutMode::Canonical ? "canonical" : "randomized"},
              {"episodes", episodes},
              {"seed", seed},
              {"run", label}};
  const auto report = harness::evaluate(checkpoint, env, layout, episodes, seed, label);
  harness::write_file(dir / "eval_config.json", snapshot.dump(2) + "\n");
  harness::write_report(report, dir);
  print_summary(report, out);
  out << "report " << (dir / "eval_summary.csv").string() << '\n';
  return kExitOk;
}

int cmd_fuse(const std::string& input, const std::string& aggregation, const std::vector<double>& weights,
             bool weights_given, std::ostream& out) {
  const fusion::BeliefMatrix bm = fusion::parse_belief_matrix(harness::read_file(input));
  fusion::AggregationMethod method{fusion::parse_aggregation_tag(aggregation), std::nullopt};
  if (weights_given) method.weights = weights;
  method.validate();

  json sources = json::array();
  for (std::size_t i = 0; i < bm.rows(); ++i) {
    sources.push_back({{"label", bm.cluster_ids()[i]}, {"masses", bm.row(i).values()}});
  }
  json j = {{"aggregation", std::string(fusion::to_string(method.tag))},
            {"frame_size", bm.frame_size()},
            {"sources", sources}};
  if (method.tag == fusion::AggregationTag::BjsdDst) {
    const auto result = fusion::fuse_bjsd_dst(bm);
    const auto& t = result.trace;
    j["bpa"] = result.bpa;
    j["trace"] = {{"log_base", t.log_base},
                  {"dmm", t.dmm},
                  {"avg_divergence", t.avg_divergence},
                  {"credibility", t.credibility},
                  {"info_volume", t.info_volume},
                  {"info_volume_normalized", t.info_volume_normalized},
                  {"adjusted_credibility", t.adjusted_credibility},
                  {"weighted_average", t.weighted_average},
                  {"bpa", t.bpa}};
  } else {
    j["bpa"] = fusion::aggregate(bm, method);
  }
  j["argmax"] = fusion::argmax(j["bpa"].get<std::vector<double>>());
  out << j.dump(2) << '\n';
  return kExitOk;
}

struct PromptFlags {
  std::string env = "find-milk", layout = "canonical", cluster, templates;
  std::uint64_t seed = 0;
  int budget = feedback::kDefaultTokenBudget;
};

int cmd_prompt(const PromptFlags& f, std::ostream& out) {
  const auto spec = harness::run_spec_from_json({{"env", f.env}, {"layout", f.layout}});
  auto environment = envs::make_environment(spec.env, spec.layout);
  environment->reset(f.seed);
  const feedback::TemplateStore store =
      f.templates.empty() ? feedback::TemplateStore() : feedback::TemplateStore(f.templates);

  std::vector<std::pair<std::string, feedback::Credence>> credences;
  if (f.cluster.empty()) {
    for (auto c : feedback::kAllClusters) {
      credences.emplace_back(std::string(feedback::cluster_id(c)), feedback::Credence::single(c));
    }
  } else if (f.cluster == "moral" || f.cluster == "moral-agent") {
    credences.emplace_back("moral-agent", feedback::Credence::moral_agent());
  } else {
    const auto c = feedback::parse_cluster(f.cluster);
    credences.emplace_back(std::string(feedback::cluster_id(c)), feedback::Credence::single(c));
  }

  for (const auto& [name, credence] : credences) {
    const auto bundle = feedback::make_bundle(store, *environment, credence, f.budget);
    out << "=== " << name << " (about " << feedback::estimate_tokens(bundle) << " tokens) ===\n";
    out << "[system]\n" << bundle.system << "\n";
    for (std::size_t i = 0; i < bundle.few_shot.size(); ++i) {
      out << "[example " << i + 1 << " user]\n" << bundle.few_shot[i].user << "\n";
      out << "[example " << i + 1 << " assistant]\n" << bundle.few_shot[i].assistant << "\n";
    }
    out << "[scenario]\n" << bundle.scenario << "\n";
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_dir, std::ostream& out) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  const auto outputs = emit_plots(paths, out_dir);
  for (const auto& image : outputs.images) out << "image " << image.string() << '\n';
  out << "csv " << outputs.tidy_csv.string() << '\n';
  return kExitOk;
}

int cmd_ablate(const RunFlags& f, const std::string& preset, std::ostream& out, std::ostream& err) {
  json suite = f.config_file.empty() ? json::object() : read_json_file(f.config_file);
  if (!suite.is_object()) throw Error(ErrorCode::InvalidConfig, "suite file must hold a JSON object");
  if (!preset.empty()) {
    if (suite.contains("runs") || suite.contains("preset")) {
      throw UsageError("--preset conflicts with the runs or preset in the suite file");
    }
    suite["preset"] = preset;
  }
  if (!suite.contains("runs") && !suite.contains("preset")) {
    throw UsageError("ablate needs --preset or a suite file with 'runs' or 'preset'");
  }
  json base = suite.value("base", json::object());
  layer_flags(base, f, StepsKey::Total);
  base.erase("out");
  suite["base"] = base;

  const fs::path root = f.given("out") ? fs::path(f.out) : fs::path("runs") / "ablation";
  const auto specs = harness::suite_from_json(suite);
  json resolved = json::array();
  for (const auto& s : specs) resolved.push_back(harness::to_json(s));
  harness::write_file(root / "suite.json", json{{"runs", resolved}}.dump(2) + "\n");

  const auto table = harness::run_ablation_suite(specs, root, logger(err));
  int failures = 0;
  for (const auto& r : table.results) {
    out << r.spec.run_label() << ": " << r.status << '\n';
    if (!r.report) ++failures;
  }
  out << "table " << (root / "ablation.csv").string() << '\n';
  if (failures > 0) {
    err << failures << " of " << table.results.size() << " runs failed\n";
    return kExitDomainError;
  }
  return kExitOk;
}

int cmd_audit(const std::string& run, std::ostream& out) {
  const auto summary = harness::replay_audit(run);
  out << "audit ok: " << summary.rows << " shaping rewards over " << summary.states
      << " states reproduced\n";
  return kExitOk;
}

}  // namespace

void apply_override(json& config, const std::string& dotted, const std::string& value) {
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw Error(ErrorCode::InvalidConfig, "empty key in '" + dotted + "'");
    if (!node->is_object()) {
      throw Error(ErrorCode::InvalidConfig, "'" + dotted + "' descends into a non-object value");
    }
    if (dot == std::string::npos) {
      (*node)[key] = parsed;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    node = &child;
    start = dot + 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reinforcement learning with fused moral feedback", "mrl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  RunFlags train_flags;
  bool train_eval = false;
  auto* train = app.add_subcommand("train", "train a base policy (base or shaping mode)");
  add_run_flags(train, train_flags, false);
  train->add_flag("--evaluate", train_eval, "evaluate the trained policy afterwards");

  RunFlags ft_flags;
  bool resume = false;
  bool ft_eval = false;
  auto* finetune = app.add_subcommand("finetune", "fine-tune a base policy on moral feedback");
  add_run_flags(finetune, ft_flags, false);
  finetune->add_flag("--resume", resume, "continue an interrupted run in --out");
  finetune->add_flag("--evaluate", ft_eval, "evaluate the fine-tuned policy afterwards");

  EvalFlags ev;
  auto* eval = app.add_subcommand("eval", "greedy evaluation with 95% confidence intervals");
  ev.run_opt = eval->add_option("--run", ev.run, "run directory")->check(CLI::ExistingDirectory);
  ev.checkpoint_opt = eval->add_option("--checkpoint", ev.checkpoint, "checkpoint file")->check(CLI::ExistingFile);
  ev.env_opt = eval->add_option("--env", ev.env, "environment for --checkpoint");
  ev.layout_opt = eval->add_option("--layout", ev.layout, "layout for --checkpoint");
  ev.episodes_opt = eval->add_option("--episodes", ev.episodes, "evaluation episodes");
  ev.seed_opt = eval->add_option("--eval-seed", ev.seed, "first episode seed");
  eval->add_option("--out", ev.out, "report directory (default: the run directory)");
  eval->add_option("--label", ev.label, "run name in the report");

  std::string fuse_input;
  std::string fuse_aggregation = "bjsd-dst";
  std::vector<double> fuse_weights;
  auto* fuse = app.add_subcommand("fuse", "fuse a belief matrix and print the trace");
  fuse->add_option("--input", fuse_input, "belief matrix file, one source per line")
      ->required()
      ->check(CLI::ExistingFile);
  fuse->add_option("--aggregation", fuse_aggregation, "bjsd-dst, vote, max or mean");
  auto* weights_opt = fuse->add_option("--weights", fuse_weights, "source weights for mean")->delimiter(',');

  PromptFlags pf;
  auto* prompt = app.add_subcommand("prompt", "render the prompts sent to belief agents");
  prompt->add_option("--env", pf.env, "find-milk or driving");
  prompt->add_option("--layout", pf.layout, "canonical or randomized");
  prompt->add_option("--seed", pf.seed, "episode seed of the rendered state");
  prompt->add_option("--cluster", pf.cluster, "one cluster or 'moral' (default: all five)");
  prompt->add_option("--templates", pf.templates, "template directory overriding the built-in set")
      ->check(CLI::ExistingDirectory);
  prompt->add_option("--budget", pf.budget, "token budget");

  std::vector<std::string> plot_inputs;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "learning-curve charts (SVG) and a tidy CSV");
  plot->add_option("csv", plot_inputs, "learning curve CSV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output directory");

  RunFlags ab_flags;
  std::string preset;
  auto* ablate = app.add_subcommand("ablate", "train, fine-tune and evaluate a suite of runs");
  add_run_flags(ablate, ab_flags, true);
  ablate->add_option("--preset", preset, "aggregation, clusters or modes");

  std::string audit_run;
  auto* audit = app.add_subcommand("audit", "recompute every logged shaping reward of a run");
  audit->add_option("--run", audit_run, "fine-tuning run directory")->required()->check(CLI::ExistingDirectory);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << kSynopsis;
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags, train_eval, out, err);
    if (*finetune) return cmd_finetune(ft_flags, resume, ft_eval, out, err);
    if (*eval) return cmd_eval(ev, out);
    if (*fuse) return cmd_fuse(fuse_input, fuse_aggregation, fuse_weights, weights_opt->count() > 0, out);
    if (*prompt) return cmd_prompt(pf, out);
    if (*plot) return cmd_plot(plot_inputs, plot_out, out);
    if (*ablate) return cmd_ablate(ab_flags, preset, out, err);
    if (*audit) return cmd_audit(audit_run, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << kSynopsis;
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  err << kSynopsis;
  return kExitUsage;
}

}  // namespace mrl::cli
