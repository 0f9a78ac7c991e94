// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Trained runs are shared between criteria and kept under
// the work directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/fusion_oracle.hpp"
#include "../unit/golden_states.hpp"
#include "CLI11.hpp"
#include "mrl/envs/environment.hpp"
#include "mrl/envs/find_milk.hpp"
#include "mrl/error.hpp"
#include "mrl/feedback/clusters.hpp"
#include "mrl/feedback/parse.hpp"
#include "mrl/feedback/templates.hpp"
#include "mrl/fusion/fusion.hpp"
#include "mrl/harness/csv.hpp"
#include "mrl/harness/evaluation.hpp"
#include "mrl/harness/run_spec.hpp"
#include "mrl/harness/training.hpp"
#include "mrl/random.hpp"
#include "mrl/rl/checkpoint.hpp"
#include "mrl/rl/mlp.hpp"
#include "mrl/rl/models.hpp"
#include "mrl/rl/ppo.hpp"

using namespace mrl;
namespace fs = std::filesystem;
using harness::RunMode;
using harness::RunSpec;
using Clock = std::chrono::steady_clock;

namespace {

const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v, int digits = 2) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "/" : "") + fmt(v[i], digits);
  return s;
}

// Random probability vector with occasional zero entries.
std::vector<double> random_dist(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform() < 0.15 ? 0.0 : -std::log(1.0 - rng.uniform());
  if (std::accumulate(v.begin(), v.end(), 0.0) == 0.0) v[rng.below(n)] = 1.0;
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  return v;
}

std::vector<double> positive_dist(Rng& rng, std::size_t n) {
  auto v = random_dist(rng, n);
  for (auto& x : v) x = 0.9 * x + 0.1 / static_cast<double>(n);
  return v;
}

fusion::BeliefMatrix matrix(const std::vector<std::vector<double>>& rows) {
  std::vector<fusion::BasicBeliefAssignment> out;
  for (const auto& r : rows) out.emplace_back(r);
  return fusion::BeliefMatrix(std::move(out));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Trained runs, memoized by label so criteria can share them.
class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {}

  struct Run {
    fs::path dir;
    fs::path checkpoint;
    harness::EvaluationReport report;
    double seconds = 0.0;
    long steps = 0;
  };

  const fs::path& root() const { return root_; }

  const Run& base(envs::EnvKind env, RunMode mode, std::uint64_t seed) {
    RunSpec s = harness::default_run_spec(env);
    s.mode = mode;
    s.training.seed = seed;
    return run(s, std::string(envs::to_string(env)) + "/" + s.run_label());
  }

  const Run& feedback(envs::EnvKind env, std::uint64_t seed, const std::function<void(RunSpec&)>& tweak,
                      const std::string& suffix = {}) {
    RunSpec s = harness::default_run_spec(env);
    s.mode = RunMode::FusedFeedback;
    s.training.seed = seed;
    tweak(s);
    s.base_checkpoint = base(env, RunMode::Base, seed).checkpoint.string();
    return run(s, std::string(envs::to_string(env)) + "/" + s.run_label() + suffix);
  }

 private:
  const Run& run(RunSpec s, const std::string& key) {
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    s.out_dir = (root_ / key).string();
    const auto t0 = Clock::now();
    Run r;
    if (harness::is_feedback_mode(s.mode)) {
      r.checkpoint = harness::finetune_feedback(s).checkpoint;
      r.steps = s.training.finetune_steps;
    } else {
      r.checkpoint = harness::train_base(s).checkpoint;
      r.steps = s.training.total_steps;
    }
    r.seconds = seconds_since(t0);
    r.dir = s.out_dir;
    r.report = harness::evaluate(r.checkpoint, s.env, s.layout, harness::kDefaultEvalEpisodes,
                                 harness::kDefaultEvalSeed, s.run_label());
    harness::write_report(r.report, r.dir);
    return runs_.emplace(key, std::move(r)).first->second;
  }

  fs::path root_;
  std::map<std::string, Run> runs_;
};

// 1 -------------------------------------------------------------------------

Outcome fusion_oracle_equivalence() {
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int compared = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const std::size_t n = 2 + rng.below(4);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < k; ++i) rows.push_back(random_dist(rng, n));
    worst = std::max(worst, max_abs_diff(fusion::fuse_bjsd_dst(matrix(rows)).bpa, oracle::fuse(rows)));
    ++compared;
  }
  const double secs = seconds_since(t0);
  return {compared == 1000 && worst <= 1e-9 && secs < 10.0,
          std::to_string(compared) + " matrices, max |diff| " + fmt_sci(worst) + " (need <= 1e-9), " +
              fmt(secs, 2) + " s (need < 10 s)"};
}

// 2 -------------------------------------------------------------------------

Outcome fusion_identities() {
  Rng rng(2002);
  int failures = 0;
  double bjs_worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const auto a = random_dist(rng, n);
    const auto b = rng.uniform() < 0.1 ? a : random_dist(rng, n);
    const fusion::BasicBeliefAssignment ma(a), mb(b);
    const double ab = fusion::bjs_divergence(ma, mb);
    const double ba = fusion::bjs_divergence(mb, ma);
    bjs_worst = std::max(bjs_worst, std::abs(ab - ba));
    if (std::abs(ab - ba) > 1e-12 || ab < 0.0 || ab > 1.0 + 1e-12) ++failures;
    const bool equal = max_abs_diff(a, b) == 0.0;
    if (equal && ab > 1e-12) ++failures;
    if (!equal && max_abs_diff(a, b) > 1e-6 && !(ab > 0.0)) ++failures;
  }

  double product_worst = 0.0, comm_worst = 0.0, assoc_worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const auto a = positive_dist(rng, n), b = positive_dist(rng, n), c = positive_dist(rng, n);
    const fusion::BasicBeliefAssignment ma(a), mb(b), mc(c);
    const auto ab = fusion::dempster_combine(ma, mb);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += a[i] * b[i];
    for (std::size_t i = 0; i < n; ++i) product_worst = std::max(product_worst, std::abs(ab[i] - a[i] * b[i] / norm));
    comm_worst = std::max(comm_worst, max_abs_diff(ab.values(), fusion::dempster_combine(mb, ma).values()));
    assoc_worst = std::max(assoc_worst, max_abs_diff(fusion::dempster_combine(ab, mc).values(),
                                                     fusion::dempster_combine(ma, fusion::dempster_combine(mb, mc)).values()));
  }

  double perm_worst = 0.0, equi_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.below(5);
    const std::size_t n = 2 + rng.below(4);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < k; ++i) rows.push_back(random_dist(rng, n));
    const auto base = fusion::fuse_bjsd_dst(matrix(rows)).bpa;
    auto shuffled = rows;
    for (std::size_t i = k - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    perm_worst = std::max(perm_worst, max_abs_diff(fusion::fuse_bjsd_dst(matrix(shuffled)).bpa, base));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    auto permuted = rows;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t a = 0; a < n; ++a) permuted[i][a] = rows[i][perm[a]];
    }
    const auto pb = fusion::fuse_bjsd_dst(matrix(permuted)).bpa;
    std::vector<double> expect(n);
    for (std::size_t a = 0; a < n; ++a) expect[a] = base[perm[a]];
    equi_worst = std::max(equi_worst, max_abs_diff(pb, expect));
  }

  const bool pass = failures == 0 && product_worst <= 1e-12 && comm_worst <= 1e-9 && assoc_worst <= 1e-9 &&
                    perm_worst <= 1e-9 && equi_worst <= 1e-9;
  return {pass, "BJS property violations " + std::to_string(failures) + " (asym " + fmt_sci(bjs_worst) +
                    "), singleton product " + fmt_sci(product_worst) + ", commutativity " + fmt_sci(comm_worst) +
                    ", associativity " + fmt_sci(assoc_worst) + ", row permutation " + fmt_sci(perm_worst) +
                    ", column permutation " + fmt_sci(equi_worst)};
}

// 3 -------------------------------------------------------------------------

Outcome worked_fusion_example() {
  const auto bpa = fusion::fuse_bjsd_dst(matrix({{0.6, 0.4}, {0.6, 0.4}})).bpa;
  const double e0 = std::abs(bpa[0] - 0.6923), e1 = std::abs(bpa[1] - 0.3077);
  return {e0 <= 1e-4 && e1 <= 1e-4, "BPA [" + fmt(bpa[0], 6) + ", " + fmt(bpa[1], 6) + "], expected [0.6923, 0.3077] +- 1e-4"};
}

// 4 -------------------------------------------------------------------------

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(a) + std::abs(b)); }

template <typename F>
Eigen::VectorXd central_difference(Eigen::VectorXd& params, F&& f, double h = 1e-6) {
  Eigen::VectorXd g(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double keep = params(i);
    params(i) = keep + h;
    const double up = f();
    params(i) = keep - h;
    const double down = f();
    params(i) = keep;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

rl::Mlp random_net(Rng& rng, std::vector<int> sizes) {
  rl::Mlp net(std::move(sizes));
  for (Eigen::Index i = 0; i < net.num_params(); ++i) net.params()(i) = 0.8 * rng.normal();
  return net;
}

Outcome gradient_checks() {
  Rng rng(4004);
  const auto t0 = Clock::now();
  double worst_policy = 0.0, worst_value = 0.0, worst_kl = 0.0;
  for (int net = 0; net < 20; ++net) {
    const int in = 2 + static_cast<int>(rng.below(4));
    const int actions = 2 + static_cast<int>(rng.below(3));
    rl::PolicyModel policy{random_net(rng, {in, 6, 5, actions}), 1.5};
    rl::ValueModel value{random_net(rng, {in, 6, 5, 1}), 1.5};
    rl::PolicyModel reference{random_net(rng, {in, 6, 5, actions}), 1.5};
    rl::TrainingConfig cfg;
    cfg.entropy_coeff = 0.05;

    rl::LossBatch b;
    const int n = 10;
    b.obs = Eigen::MatrixXd(in, n);
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < in; ++r) b.obs(r, c) = 2.0 * rng.normal();
      const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(actions)));
      std::vector<double> o(b.obs.col(c).data(), b.obs.col(c).data() + in);
      const double lp = rl::policy_forward(policy, o).log_probs[static_cast<std::size_t>(a)];
      double shift = 0.0;
      do {
        shift = 0.6 * rng.normal();
      } while (std::abs(std::abs(std::exp(-shift) - 1.0) - cfg.clip_epsilon) < 0.05);  // away from clip kinks
      b.actions.push_back(a);
      b.old_log_probs.push_back(lp + shift);
      b.advantages.push_back(rng.normal());
      b.returns.push_back(rng.normal());
      b.old_values.push_back(rng.normal());
    }

    const auto loss = rl::ppo_loss(policy, value, b, cfg);
    const auto fd_p = central_difference(policy.net.params(), [&] { return rl::ppo_loss(policy, value, b, cfg).total; });
    for (Eigen::Index i = 0; i < fd_p.size(); ++i) worst_policy = std::max(worst_policy, rel_err(loss.policy_grad(i), fd_p(i)));
    const auto fd_v = central_difference(value.net.params(), [&] { return rl::ppo_loss(policy, value, b, cfg).total; });
    for (Eigen::Index i = 0; i < fd_v.size(); ++i) worst_value = std::max(worst_value, rel_err(loss.value_grad(i), fd_v(i)));
    const Eigen::MatrixXd x = b.obs / policy.input_scale;
    const auto kl = rl::kl_to_reference(policy, reference, x);
    const auto fd_k = central_difference(policy.net.params(), [&] { return rl::kl_to_reference(policy, reference, x).mean_kl; });
    for (Eigen::Index i = 0; i < fd_k.size(); ++i) worst_kl = std::max(worst_kl, rel_err(kl.grad(i), fd_k(i)));
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_policy <= 1e-4 && worst_value <= 1e-4 && worst_kl <= 1e-4 && secs < 30.0;
  return {pass, "20 networks, max relative error policy " + fmt_sci(worst_policy) + ", value " + fmt_sci(worst_value) +
                    ", KL " + fmt_sci(worst_kl) + " (need <= 1e-4), " + fmt(secs, 2) + " s (need < 30 s)"};
}

// 5-7 -----------------------------------------------------------------------

double fraction_shortest(const harness::EvaluationReport& r) {
  int hits = 0;
  for (const auto& e : r.episodes) {
    if (harness::episode_value(e, "reached_milk") == 1.0 && harness::episode_value(e, "steps_to_milk") == 14.0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(r.episodes.size());
}

std::vector<double> per_seed(Workspace& ws, envs::EnvKind env, RunMode mode, const std::string& metric) {
  std::vector<double> out;
  for (auto s : kSeeds) out.push_back(ws.base(env, mode, s).report.metric(metric).mean);
  return out;
}

Outcome findmilk_primary_goal(Workspace& ws) {
  std::vector<double> fractions, secs;
  long steps = 0;
  for (auto s : kSeeds) {
    const auto& r = ws.base(envs::EnvKind::FindMilk, RunMode::Base, s);
    fractions.push_back(fraction_shortest(r.report));
    secs.push_back(r.seconds);
    steps = std::max(steps, r.steps);
  }
  const double f = mean_of(fractions);
  const double slowest = *std::max_element(secs.begin(), secs.end());
  return {f >= 0.9 && steps <= 300000 && slowest < 900.0,
          "14-step episodes " + fmt(100 * f, 1) + "% (per seed " + list(fractions) + ", need >= 90%), " +
              std::to_string(steps) + " env steps, slowest seed " + fmt(slowest, 1) + " s (need < 900 s)"};
}

Outcome findmilk_handcrafted(Workspace& ws) {
  const auto cry = per_seed(ws, envs::EnvKind::FindMilk, RunMode::BaseShaping, "crying_pacified");
  const auto woke = per_seed(ws, envs::EnvKind::FindMilk, RunMode::BaseShaping, "sleeping_woken");
  const auto steps = per_seed(ws, envs::EnvKind::FindMilk, RunMode::BaseShaping, "steps_to_milk");
  return {mean_of(cry) >= 4.5 && mean_of(woke) <= 0.5 && mean_of(steps) <= 15.0,
          "crying pacified " + fmt(mean_of(cry)) + " (need >= 4.5), sleeping woken " + fmt(mean_of(woke)) +
              " (need <= 0.5), steps to milk " + fmt(mean_of(steps)) + " (need <= 15); seeds " + list(cry) + " | " +
              list(woke) + " | " + list(steps)};
}

const Workspace::Run& findmilk_feedback(Workspace& ws, std::uint64_t seed) {
  return ws.feedback(envs::EnvKind::FindMilk, seed, [](RunSpec&) {});
}

Outcome findmilk_feedback_finetune(Workspace& ws) {
  std::vector<double> base_cry, base_woke, ft_cry, ft_woke, ft_steps;
  for (auto s : kSeeds) {
    const auto& b = ws.base(envs::EnvKind::FindMilk, RunMode::Base, s).report;
    const auto& f = findmilk_feedback(ws, s).report;
    base_cry.push_back(b.metric("crying_pacified").mean);
    base_woke.push_back(b.metric("sleeping_woken").mean);
    ft_cry.push_back(f.metric("crying_pacified").mean);
    ft_woke.push_back(f.metric("sleeping_woken").mean);
    ft_steps.push_back(f.metric("steps_to_milk").mean);
  }
  const double gain = mean_of(ft_cry) - mean_of(base_cry);
  return {gain >= 2.0 && mean_of(ft_woke) < mean_of(base_woke) && mean_of(ft_steps) <= 18.0,
          "crying pacified " + fmt(mean_of(base_cry)) + " -> " + fmt(mean_of(ft_cry)) + " (gain " + fmt(gain) +
              ", need >= 2.0), sleeping woken " + fmt(mean_of(base_woke)) + " -> " + fmt(mean_of(ft_woke)) +
              " (need lower), steps to milk " + fmt(mean_of(ft_steps)) + " (need <= 18)"};
}

// 8-9 -----------------------------------------------------------------------

Outcome driving_primary_goal(Workspace& ws) {
  std::vector<double> trained, untrained;
  for (auto s : kSeeds) {
    trained.push_back(ws.base(envs::EnvKind::Driving, RunMode::Base, s).report.metric("collisions").mean);
    RunSpec spec = harness::default_run_spec(envs::EnvKind::Driving);
    spec.training.seed = s;
    const auto init = harness::initial_models(spec);
    untrained.push_back(harness::evaluate_policy(init.policy, envs::EnvKind::Driving, envs::LayoutMode::Canonical,
                                                 harness::kDefaultEvalEpisodes, harness::kDefaultEvalSeed)
                            .metric("collisions")
                            .mean);
  }
  const double t = mean_of(trained), u = mean_of(untrained);
  return {t <= 1.0 && u >= 3.0 * t,
          "collisions per episode trained " + fmt(t) + " (need <= 1.0; seeds " + list(trained) + "), untrained " +
              fmt(u) + " (need >= 3x; seeds " + list(untrained) + ")"};
}

Outcome driving_handcrafted(Workspace& ws) {
  const auto base_g = per_seed(ws, envs::EnvKind::Driving, RunMode::Base, "grandmas_rescued");
  const auto base_l = per_seed(ws, envs::EnvKind::Driving, RunMode::Base, "lane_changes");
  const auto shp_g = per_seed(ws, envs::EnvKind::Driving, RunMode::BaseShaping, "grandmas_rescued");
  const auto shp_l = per_seed(ws, envs::EnvKind::Driving, RunMode::BaseShaping, "lane_changes");
  const auto shp_c = per_seed(ws, envs::EnvKind::Driving, RunMode::BaseShaping, "collisions");
  const double gain = mean_of(shp_g) - mean_of(base_g);
  return {gain >= 5.0 && mean_of(shp_l) > mean_of(base_l),
          "grandmas rescued " + fmt(mean_of(base_g)) + " -> " + fmt(mean_of(shp_g)) + " (gain " + fmt(gain) +
              ", need >= 5), lane changes " + fmt(mean_of(base_l)) + " -> " + fmt(mean_of(shp_l)) +
              " (need higher), collisions under shaping " + fmt(mean_of(shp_c))};
}

// 10 ------------------------------------------------------------------------

Outcome kl_anchor_limit(Workspace& ws) {
  const auto& ft = ws.feedback(
      envs::EnvKind::FindMilk, 1,
      [](RunSpec& s) {
        s.training.kl_coeff = 100.0;
        s.training.shaping_coeff = 0.0;
      },
      "-kl100");
  const auto& base = ws.base(envs::EnvKind::FindMilk, RunMode::Base, 1);
  const auto p = rl::load_checkpoint(ft.checkpoint).policy;
  const auto q = rl::load_checkpoint(base.checkpoint).policy;
  const double kl = harness::mean_policy_kl(p, q, envs::EnvKind::FindMilk, envs::LayoutMode::Canonical, 1000,
                                            harness::kDefaultEvalSeed);
  return {kl <= 0.05, "lambda_KL 100, zero shaping: mean KL over 1000 states " + fmt_sci(kl) + " (need <= 0.05)"};
}

// 11 ------------------------------------------------------------------------

Outcome audit_replay(Workspace& ws) {
  std::vector<fs::path> dirs;
  for (auto s : kSeeds) dirs.push_back(findmilk_feedback(ws, s).dir);

  // Every other feedback mode and aggregation, briefly, on both environments.
  struct Variant {
    RunMode mode;
    fusion::AggregationTag tag;
    std::optional<feedback::MoralCluster> cluster;
  };
  std::vector<Variant> variants;
  for (auto tag : {fusion::AggregationTag::MajorityVote, fusion::AggregationTag::MaxBelief,
                   fusion::AggregationTag::WeightedMean}) {
    variants.push_back({RunMode::FusedFeedback, tag, std::nullopt});
  }
  variants.push_back({RunMode::HumanFeedback, fusion::AggregationTag::BjsdDst, std::nullopt});
  variants.push_back({RunMode::MoralPrompt, fusion::AggregationTag::BjsdDst, std::nullopt});
  for (auto c : feedback::kAllClusters) variants.push_back({RunMode::SingleCluster, fusion::AggregationTag::BjsdDst, c});

  for (auto env : {envs::EnvKind::FindMilk, envs::EnvKind::Driving}) {
    if (env == envs::EnvKind::Driving) {
      dirs.push_back(ws.feedback(env, 1, [](RunSpec& s) { s.training.finetune_steps = 4096; }, "-short").dir);
    }
    for (const auto& v : variants) {
      dirs.push_back(ws.feedback(
                           env, 1,
                           [&](RunSpec& s) {
                             s.mode = v.mode;
                             s.aggregation.tag = v.tag;
                             s.cluster = v.cluster;
                             if (v.mode == RunMode::HumanFeedback) s.provider.kind = feedback::ProviderKind::SyntheticHuman;
                             s.training.finetune_steps = 4096;
                           },
                           "-short")
                         .dir);
    }
  }

  std::size_t rows = 0;
  std::vector<std::string> failures;
  for (const auto& d : dirs) {
    try {
      rows += harness::replay_audit(d).rows;
    } catch (const std::exception& e) {
      failures.push_back(d.filename().string() + ": " + e.what());
    }
  }
  std::string detail = std::to_string(dirs.size()) + " feedback runs, " + std::to_string(rows) +
                       " logged shaping rewards recomputed, " + std::to_string(failures.size()) + " mismatching runs";
  if (!failures.empty()) detail += " (first: " + failures.front() + ")";
  return {failures.empty() && rows > 0, detail};
}

// 12 ------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MRL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(Workspace& ws) {
  const fs::path root = ws.root() / "determinism";
  std::vector<std::string> compared;
  std::vector<std::string> differing;
  int failures = 0;
  for (const char* copy : {"a", "b"}) {
    const fs::path d = root / copy;
    const std::string base = (d / "base").string(), ft = (d / "ft").string();
    failures += run_cli("train --env find-milk --mode base --seed 5 --steps 20480 --out " + base) != 0;
    failures += run_cli("eval --run " + base) != 0;
    failures += run_cli("finetune --base " + base + " --provider mock --steps 4096 --out " + ft) != 0;
    failures += run_cli("eval --run " + ft) != 0;
  }
  for (const char* run : {"base", "ft"}) {
    for (const char* file : {"model.json", "learning_curve.csv", "eval_episodes.csv", "eval_summary.csv", "audit.csv",
                             "beliefs.jsonl"}) {
      const fs::path a = root / "a" / run / file, b = root / "b" / run / file;
      if (!fs::exists(a) && std::string(run) == "base") continue;
      compared.push_back(std::string(run) + "/" + file);
      if (!fs::exists(a) || !fs::exists(b) || harness::read_file(a) != harness::read_file(b)) {
        differing.push_back(compared.back());
      }
    }
  }
  std::string detail = "two CLI executions (train, finetune with the mock provider, eval), " +
                       std::to_string(compared.size()) + " artifacts compared, " + std::to_string(differing.size()) +
                       " differ, " + std::to_string(failures) + " failed commands";
  if (!differing.empty()) detail += " (first: " + differing.front() + ")";
  return {failures == 0 && differing.empty() && compared.size() == 10, detail};
}

// 13 ------------------------------------------------------------------------

Outcome prompt_parse_regression() {
  const feedback::TemplateStore store;
  const fs::path prompts = fs::path(MRL_FIXTURES) / "prompts";
  int prompt_total = 0, prompt_ok = 0;
  for (const auto& g : golden::golden_prompts()) {
    ++prompt_total;
    const fs::path p = prompts / (g.name + ".txt");
    if (fs::exists(p) && golden::read_text(p) == g.render(store)) ++prompt_ok;
  }

  const fs::path dir = fs::path(MRL_FIXTURES) / "transcripts";
  int total = 0, agree = 0;
  for (const auto& c : golden::transcript_cases(dir)) {
    ++total;
    const auto text = golden::read_text(dir / c.file);
    try {
      const auto bba = feedback::parse_belief_json(text, c.n_actions);
      if (c.error.empty() && max_abs_diff(bba.values(), c.expected) <= 1e-12) ++agree;
    } catch (const Error& e) {
      if (!c.error.empty() && to_string(e.code()) == c.error && e.detail() == text) ++agree;
    }
  }
  return {prompt_total == 20 && prompt_ok == 20 && total == 30 && agree == 30,
          "prompts byte-identical " + std::to_string(prompt_ok) + "/" + std::to_string(prompt_total) +
              " (need 20/20), transcripts agreeing " + std::to_string(agree) + "/" + std::to_string(total) +
              " (need 30/30)"};
}

// 14 ------------------------------------------------------------------------

// Depth-first over every action sequence, pruning prefixes that can no
// longer reach the milk within 14 steps.
long count_shortest(const envs::FindMilkState& s, int depth, std::set<std::vector<int>>& paths, std::vector<int>& prefix) {
  if (depth + envs::manhattan(s.robot, s.milk) > 14) return 0;
  long count = 0;
  for (int a = 0; a < envs::kFindMilkActions; ++a) {
    auto next = s;
    const auto r = envs::findmilk_step(next, static_cast<envs::FindMilkAction>(a));
    prefix.push_back(a);
    if (r.done) {
      if (r.events.reached_milk && r.step_count == 14) {
        ++count;
        paths.insert(prefix);
      }
    } else {
      count += count_shortest(next, depth + 1, paths, prefix);
    }
    prefix.pop_back();
  }
  return count;
}

Outcome shortest_path_count() {
  const auto t0 = Clock::now();
  const auto start = envs::findmilk_from_layout(envs::FindMilkLayout{});
  std::set<std::vector<int>> paths;
  std::vector<int> prefix;
  const long n = count_shortest(start, 0, paths, prefix);
  bool monotone = true;
  for (const auto& p : paths) {
    for (int a : p) monotone = monotone && (a == static_cast<int>(envs::FindMilkAction::Up) ||
                                            a == static_cast<int>(envs::FindMilkAction::Right));
  }
  const double secs = seconds_since(t0);
  return {n == 3432 && static_cast<long>(paths.size()) == n && monotone && secs < 1.0,
          std::to_string(n) + " distinct 14-step paths, all monotone: " + (monotone ? "yes" : "no") +
              " (need 3432), " + fmt(secs, 3) + " s (need < 1 s)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  std::string workdir = (fs::temp_directory_path() / "mrl_acceptance").string();
  std::vector<int> only;
  bool keep = false;
  app.add_option("--workdir", workdir, "directory for trained runs (wiped first)");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_flag("--keep", keep, "keep the work directory afterwards");
  CLI11_PARSE(app, argc, argv);

  fs::remove_all(workdir);
  fs::create_directories(workdir);
  Workspace ws(workdir);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"fusion matches the naive oracle", fusion_oracle_equivalence},
      {"fusion unit identities", fusion_identities},
      {"worked fusion example", worked_fusion_example},
      {"analytic gradients match finite differences", gradient_checks},
      {"find-milk base reaches milk in 14 steps", [&] { return findmilk_primary_goal(ws); }},
      {"find-milk handcrafted shaping", [&] { return findmilk_handcrafted(ws); }},
      {"find-milk fine-tuning on fused mock feedback", [&] { return findmilk_feedback_finetune(ws); }},
      {"driving base avoids collisions", [&] { return driving_primary_goal(ws); }},
      {"driving handcrafted shaping shifts behaviour", [&] { return driving_handcrafted(ws); }},
      {"KL anchor keeps the policy near the base", [&] { return kl_anchor_limit(ws); }},
      {"audit replay reproduces shaping rewards", [&] { return audit_replay(ws); }},
      {"mock runs are byte-for-byte deterministic", [&] { return determinism(ws); }},
      {"prompt and parse regression", prompt_parse_regression},
      {"shortest paths on the empty grid", shortest_path_count},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << criteria[i].first << " | " << o.detail
              << " [" << fmt(seconds_since(t0), 1) << " s]" << std::endl;
  }
  if (!keep) fs::remove_all(workdir);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
