#include <cmath>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "mrl/error.hpp"
#include "mrl/rl/checkpoint.hpp"
#include "mrl/rl/rollout.hpp"

using namespace mrl;
using namespace mrl::rl;

namespace {

PolicyModel random_policy(Rng& rng, int in, int actions, std::vector<int> hidden = {6, 5}) {
  PolicyModel p{Mlp([&] {
                  std::vector<int> s{in};
                  s.insert(s.end(), hidden.begin(), hidden.end());
                  s.push_back(actions);
                  return s;
                }()),
                1.5};
  for (Eigen::Index i = 0; i < p.net.num_params(); ++i) p.net.params()(i) = 0.8 * rng.normal();
  return p;
}

ValueModel random_value(Rng& rng, int in) {
  ValueModel v{Mlp({in, 6, 5, 1}), 1.5};
  for (Eigen::Index i = 0; i < v.net.num_params(); ++i) v.net.params()(i) = 0.8 * rng.normal();
  return v;
}

Eigen::MatrixXd random_obs(Rng& rng, int in, int n) {
  Eigen::MatrixXd x(in, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < in; ++r) x(r, c) = 2.0 * rng.normal();
  }
  return x;
}

// Relative error with a floor so that near-zero components compare
// absolutely.
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

double log_prob_of(const PolicyModel& p, const Eigen::MatrixXd& obs, int col, int action) {
  std::vector<double> o(obs.col(col).data(), obs.col(col).data() + obs.rows());
  return policy_forward(p, o).log_probs[static_cast<std::size_t>(action)];
}

LossBatch random_batch(Rng& rng, const PolicyModel& p, int in, int actions, int n, double eps) {
  LossBatch b;
  b.obs = random_obs(rng, in, n);
  for (int c = 0; c < n; ++c) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(actions)));
    b.actions.push_back(a);
    // Keep ratios away from the clip boundaries, where the loss has kinks.
    double shift = 0.0;
    do {
      shift = 0.6 * rng.normal();
    } while (std::abs(std::abs(std::exp(-shift) - 1.0) - eps) < 0.05);
    b.old_log_probs.push_back(log_prob_of(p, b.obs, c, a) + shift);
    b.advantages.push_back(rng.normal());
    b.returns.push_back(rng.normal());
    b.old_values.push_back(rng.normal());
  }
  return b;
}

}  // namespace

TEST_CASE("mlp backward matches finite differences") {
  Rng rng(1);
  for (int t = 0; t < 5; ++t) {
    Mlp net({3, 4, 4, 2});
    for (Eigen::Index i = 0; i < net.num_params(); ++i) net.params()(i) = rng.normal();
    const Eigen::MatrixXd x = random_obs(rng, 3, 7);
    Eigen::MatrixXd w(2, 7);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    Mlp::Tape tape;
    net.forward(x, &tape);
    const Eigen::VectorXd g = net.backward(tape, w);
    const Eigen::VectorXd fd = central_difference(net.params(), [&] {
      return (net.forward(x).array() * w.array()).sum();
    });
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(rel_err(g(i), fd(i)) <= 1e-6);
  }
}

TEST_CASE("orthogonal initialization") {
  Rng rng(2);
  Mlp net({8, 64, 64, 4});
  net.orthogonal_init(rng, {std::sqrt(2.0), std::sqrt(2.0), 0.01});
  const Eigen::MatrixXd w0 = net.weight(0);  // 64 x 8: orthonormal columns
  CHECK((w0.transpose() * w0 - 2.0 * Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd w2 = net.weight(2);  // 4 x 64: orthonormal rows
  CHECK((w2 * w2.transpose() - 1e-4 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(net.bias(1).isZero());
}

TEST_CASE("policy forward") {
  PolicyModel zero{Mlp({4, 8, 3}), 1.0};
  const auto d = policy_forward(zero, std::vector<double>{1, 2, 3, 4});
  for (double p : d.probs) CHECK(p == doctest::Approx(1.0 / 3.0));
  CHECK(value_forward(ValueModel{Mlp({4, 8, 1}), 1.0}, std::vector<double>{1, 2, 3, 4}) == 0.0);

  Rng rng(3);
  const auto p = random_policy(rng, 4, 3);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> obs(4);
    for (auto& x : obs) x = 5.0 * rng.normal();
    const auto dist = policy_forward(p, obs);
    CHECK(std::abs(std::accumulate(dist.probs.begin(), dist.probs.end(), 0.0) - 1.0) <= 1e-9);
    for (double x : dist.probs) CHECK(x > 0.0);
  }
  const std::vector<double> obs{0.3, -1, 2, 0.5};
  CHECK(policy_forward(p, obs).probs == policy_forward(p, obs).probs);

  try {
    policy_forward(p, std::vector<double>{1, 2, 3});
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  try {
    policy_forward(p, std::vector<double>{1, NAN, 3, 4});
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("value gradient matches finite differences") {
  Rng rng(4);
  auto v = random_value(rng, 3);
  const std::vector<double> obs{0.4, -1.2, 2.0};
  Eigen::MatrixXd x(3, 1);
  for (int i = 0; i < 3; ++i) x(i, 0) = obs[static_cast<std::size_t>(i)] / v.input_scale;
  Mlp::Tape tape;
  v.net.forward(x, &tape);
  const Eigen::VectorXd g = v.net.backward(tape, Eigen::MatrixXd::Ones(1, 1));
  const Eigen::VectorXd fd = central_difference(v.net.params(), [&] { return value_forward(v, obs); });
  for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(rel_err(g(i), fd(i)) <= 1e-4);
}

TEST_CASE("sampling") {
  Rng rng(5);
  Categorical point = categorical_from_logits(std::vector<double>{-1e3, -1e3, 0.0});
  for (int t = 0; t < 100; ++t) CHECK(sample_action(point, rng).action == 2);

  const auto dist = categorical_from_logits(std::vector<double>{0.1, 1.0, -0.5, 0.4});
  std::vector<int> counts(4, 0);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) {
    const auto s = sample_action(dist, rng);
    CHECK(s.log_prob == dist.log_probs[static_cast<std::size_t>(s.action)]);
    ++counts[static_cast<std::size_t>(s.action)];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = dist.probs[i];
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(counts[i] - draws * p) <= 3.0 * sigma);
  }

  Rng a(9);
  Rng b(9);
  for (int t = 0; t < 50; ++t) CHECK(sample_action(dist, a).action == sample_action(dist, b).action);
  CHECK(greedy_action(categorical_from_logits(std::vector<double>{1, 3, 3})) == 1);
}

TEST_CASE("categorical KL") {
  CHECK(kl_categorical(std::vector<double>{.2, .8}, std::vector<double>{.2, .8}) == 0.0);
  CHECK(kl_categorical(std::vector<double>{1, 0}, std::vector<double>{.5, .5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  try {
    kl_categorical(std::vector<double>{.5, .5}, std::vector<double>{1, 0});
    FAIL("expected SupportViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SupportViolation);
  }
  Rng rng(6);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> lp(4), lq(4);
    for (auto& x : lp) x = 2.0 * rng.normal();
    for (auto& x : lq) x = 2.0 * rng.normal();
    CHECK(kl_categorical(categorical_from_logits(lp).probs, categorical_from_logits(lq).probs) >= 0.0);
  }
}

TEST_CASE("gradient checks on random small networks") {
  Rng rng(7);
  for (int net = 0; net < 20; ++net) {
    const int in = 2 + static_cast<int>(rng.below(4));
    const int actions = 2 + static_cast<int>(rng.below(3));
    auto policy = random_policy(rng, in, actions);
    auto value = random_value(rng, in);
    TrainingConfig cfg;
    cfg.entropy_coeff = 0.05;
    const auto batch = random_batch(rng, policy, in, actions, 10, cfg.clip_epsilon);

    const auto loss = ppo_loss(policy, value, batch, cfg);
    const Eigen::VectorXd fd_policy = central_difference(
        policy.net.params(), [&] { return ppo_loss(policy, value, batch, cfg).total; });
    for (Eigen::Index i = 0; i < fd_policy.size(); ++i) {
      CHECK(rel_err(loss.policy_grad(i), fd_policy(i)) <= 1e-4);
    }
    const Eigen::VectorXd fd_value = central_difference(
        value.net.params(), [&] { return ppo_loss(policy, value, batch, cfg).total; });
    for (Eigen::Index i = 0; i < fd_value.size(); ++i) {
      CHECK(rel_err(loss.value_grad(i), fd_value(i)) <= 1e-4);
    }

    auto reference = random_policy(rng, in, actions);
    const Eigen::MatrixXd x = batch.obs / policy.input_scale;
    const auto kl = kl_to_reference(policy, reference, x);
    const Eigen::VectorXd fd_kl = central_difference(
        policy.net.params(), [&] { return kl_to_reference(policy, reference, x).mean_kl; });
    for (Eigen::Index i = 0; i < fd_kl.size(); ++i) CHECK(rel_err(kl.grad(i), fd_kl(i)) <= 1e-4);
  }
}

TEST_CASE("clipped surrogate") {
  PolicyModel policy{Mlp({1, 2}), 1.0};
  ValueModel value{Mlp({1, 1}), 1.0};
  TrainingConfig cfg;
  cfg.entropy_coeff = 0.0;
  LossBatch b;
  b.obs = Eigen::MatrixXd::Zero(1, 1);
  b.actions = {0};
  b.old_log_probs = {std::log(0.5) - std::log(2.0)};  // ratio 2
  b.advantages = {1.0};
  b.returns = {0.0};
  b.old_values = {0.0};
  const auto loss = ppo_loss(policy, value, b, cfg);
  CHECK(loss.mean_ratio == doctest::Approx(2.0));
  CHECK(loss.policy_loss == doctest::Approx(-1.2));
  CHECK(loss.clip_fraction == 1.0);
  CHECK(loss.policy_grad.isZero());

  // Negative advantage: the unclipped term is the pessimistic one.
  b.advantages = {-1.0};
  CHECK(ppo_loss(policy, value, b, cfg).policy_loss == doctest::Approx(2.0));
}

TEST_CASE("unbounded clip reduces to the vanilla policy gradient") {
  Rng rng(8);
  auto policy = random_policy(rng, 3, 3);
  ValueModel value = random_value(rng, 3);
  TrainingConfig cfg;
  cfg.entropy_coeff = 0.0;
  cfg.clip_epsilon = 1e300;
  LossBatch b;
  b.obs = random_obs(rng, 3, 12);
  for (int c = 0; c < 12; ++c) {
    const int a = static_cast<int>(rng.below(3));
    b.actions.push_back(a);
    b.old_log_probs.push_back(log_prob_of(policy, b.obs, c, a));
    b.advantages.push_back(rng.normal());
    b.returns.push_back(0.0);
    b.old_values.push_back(0.0);
  }
  const auto loss = ppo_loss(policy, value, b, cfg);
  // Vanilla estimator: -mean(A * grad log pi(a|s)), differentiated numerically.
  const Eigen::VectorXd vanilla = central_difference(policy.net.params(), [&] {
    double s = 0.0;
    for (int c = 0; c < 12; ++c) {
      s -= b.advantages[static_cast<std::size_t>(c)] *
           log_prob_of(policy, b.obs, c, b.actions[static_cast<std::size_t>(c)]);
    }
    return s / 12.0;
  });
  for (Eigen::Index i = 0; i < vanilla.size(); ++i) CHECK(std::abs(loss.policy_grad(i) - vanilla(i)) <= 1e-8);
}

TEST_CASE("generalized advantage estimation") {
  RolloutBuffer one;
  one.rewards = {1.0};
  one.values = {0.0};
  one.dones = {1};
  one.actions = {0};
  compute_gae(one, 1.0, 1.0);
  CHECK(one.advantages[0] == 1.0);
  CHECK(one.returns[0] == 1.0);

  RolloutBuffer empty;
  try {
    compute_gae(empty, 0.99, 0.95);
    FAIL("expected EmptyBuffer");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBuffer);
  }

  Rng rng(10);
  RolloutBuffer buf;
  const int n = 50;
  for (int i = 0; i < n; ++i) {
    buf.actions.push_back(0);
    buf.rewards.push_back(rng.normal());
    buf.values.push_back(rng.normal());
    buf.dones.push_back(rng.uniform() < 0.1 ? 1 : 0);
  }
  buf.last_value = rng.normal();
  auto next_value = [&](int t) { return t + 1 < n ? buf.values[static_cast<std::size_t>(t + 1)] : buf.last_value; };
  auto delta = [&](int t) {
    const auto i = static_cast<std::size_t>(t);
    return buf.rewards[i] + 0.9 * next_value(t) * (buf.dones[i] ? 0.0 : 1.0) - buf.values[i];
  };

  RolloutBuffer td = buf;
  compute_gae(td, 0.9, 0.0);
  for (int t = 0; t < n; ++t) CHECK(td.advantages[static_cast<std::size_t>(t)] == doctest::Approx(delta(t)).epsilon(1e-12));

  // Direct summation: A_t = sum_l (gamma lambda)^l delta_{t+l}, truncated at
  // the first episode end.
  const double gamma = 0.9;
  const double lambda = 0.7;
  compute_gae(buf, gamma, lambda);
  for (int t = 0; t < n; ++t) {
    double sum = 0.0;
    double w = 1.0;
    for (int l = t; l < n; ++l) {
      sum += w * delta(l);
      if (buf.dones[static_cast<std::size_t>(l)]) break;
      w *= gamma * lambda;
    }
    CHECK(std::abs(buf.advantages[static_cast<std::size_t>(t)] - sum) <= 1e-10);
    CHECK(buf.returns[static_cast<std::size_t>(t)] ==
          doctest::Approx(buf.advantages[static_cast<std::size_t>(t)] + buf.values[static_cast<std::size_t>(t)]));
  }

  // gamma = lambda = 1: advantages are Monte-Carlo returns minus values.
  RolloutBuffer mc;
  for (int i = 0; i < 20; ++i) {
    mc.actions.push_back(0);
    mc.rewards.push_back(rng.normal());
    mc.values.push_back(rng.normal());
    mc.dones.push_back(i == 9 || i == 19 ? 1 : 0);
  }
  compute_gae(mc, 1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const int end = t <= 9 ? 9 : 19;
    double g = 0.0;
    for (int l = t; l <= end; ++l) g += mc.rewards[static_cast<std::size_t>(l)];
    CHECK(std::abs(mc.advantages[static_cast<std::size_t>(t)] - (g - mc.values[static_cast<std::size_t>(t)])) <= 1e-10);
  }
}

TEST_CASE("ppo update behaviour") {
  Rng rng(11);
  auto env = envs::make_environment(envs::EnvKind::FindMilk);
  auto policy = make_policy(8, 4, {16, 16}, 7.0, rng);
  auto value = make_value(8, {16, 16}, 7.0, rng);
  RolloutCursor cursor(env->clone(), 0);
  Rng sample_rng(12);
  auto buf = collect_rollout(cursor, policy, value, 128, {}, sample_rng);
  compute_gae(buf, 0.99, 0.95);

  TrainingConfig cfg;
  cfg.minibatch_size = 32;
  cfg.entropy_coeff = 0.0;
  auto zero = buf;
  std::fill(zero.advantages.begin(), zero.advantages.end(), 0.0);
  OptimizerState opt;
  Rng r1(1);
  const auto frozen = ppo_update(policy, value, zero, cfg, opt, r1);
  CHECK(frozen.policy.net.params() == policy.net.params());
  CHECK(frozen.value.net.params() != value.net.params());
  CHECK(opt.policy.t == 16);

  OptimizerState o1, o2;
  Rng a(5), b(5);
  const auto u1 = ppo_update(policy, value, buf, cfg, o1, a);
  const auto u2 = ppo_update(policy, value, buf, cfg, o2, b);
  CHECK(u1.policy.net.params() == u2.policy.net.params());
  CHECK(u1.stats.minibatches == 16);

  auto poisoned = buf;
  poisoned.returns[3] = NAN;
  OptimizerState untouched;
  Rng c(5);
  try {
    ppo_update(policy, value, poisoned, cfg, untouched, c);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }
  CHECK(untouched.policy.t == 0);

  RolloutBuffer tiny;
  OptimizerState o3;
  CHECK_THROWS_AS(ppo_update(policy, value, tiny, cfg, o3, c), Error);
}

TEST_CASE("rollout reward composition") {
  Rng rng(13);
  auto policy = make_policy(8, 4, {16}, 7.0, rng);
  auto value = make_value(8, {16}, 7.0, rng);

  RolloutCursor base(envs::make_environment(envs::EnvKind::FindMilk), 0);
  Rng r1(3);
  const auto env_only = collect_rollout(base, policy, value, 300, {}, r1);
  for (std::size_t i = 0; i < env_only.size(); ++i) CHECK(env_only.rewards[i] == env_only.r_env[i]);

  RolloutCursor shaped(envs::make_environment(envs::EnvKind::FindMilk), 0);
  Rng r2(3);
  RewardSource hand{RewardMode::EnvPlusHandcrafted, 1.0, nullptr, 0.0, {}};
  const auto with_shaping = collect_rollout(shaped, policy, value, 300, hand, r2);
  bool saw_pacify = false;
  for (std::size_t i = 0; i < with_shaping.size(); ++i) {
    CHECK(with_shaping.rewards[i] == with_shaping.r_env[i] + with_shaping.r_shaping[i]);
    if (with_shaping.r_shaping[i] == 1.0) saw_pacify = true;
  }
  CHECK(saw_pacify);
  // Same seeds, same policy: identical transitions regardless of reward mode.
  CHECK(with_shaping.actions == env_only.actions);

  RolloutCursor again(envs::make_environment(envs::EnvKind::FindMilk), 0);
  Rng r3(3);
  const auto repeat = collect_rollout(again, policy, value, 300, {}, r3);
  CHECK(repeat.obs == env_only.obs);
  CHECK(repeat.log_probs == env_only.log_probs);
  CHECK(repeat.values == env_only.values);

  auto reference = make_policy(8, 4, {16}, 7.0, rng);
  RolloutCursor fb(envs::make_environment(envs::EnvKind::FindMilk), 0);
  Rng r4(3);
  RewardSource feedback{RewardMode::Feedback, 1.0, &reference, 0.5,
                        [](const envs::Environment&, int action) { return action == 0 ? 1.0 : 0.0; }};
  const auto fbuf = collect_rollout(fb, policy, value, 50, feedback, r4);
  for (std::size_t i = 0; i < fbuf.size(); ++i) {
    const auto p = policy_forward(policy, fbuf.obs[i]);
    const auto q = policy_forward(reference, fbuf.obs[i]);
    CHECK(fbuf.r_env[i] == doctest::Approx(-0.5 * kl_categorical(p.probs, q.probs)).epsilon(1e-12));
    CHECK(fbuf.r_shaping[i] == (fbuf.actions[i] == 0 ? 1.0 : 0.0));
  }
  RewardSource broken{RewardMode::Feedback, 1.0, nullptr, 0.5, {}};
  CHECK_THROWS_AS(collect_rollout(fb, policy, value, 5, broken, r4), Error);
}

TEST_CASE("training config") {
  TrainingConfig c;
  CHECK_NOTHROW(c.validate());
  const auto round = config_from_json(to_json(c));
  CHECK(round == c);
  CHECK(config_from_json({{"kl_coeff", 100.0}}).kl_coeff == 100.0);
  CHECK_THROWS_AS(config_from_json({{"klcoeff", 1.0}}), Error);
  CHECK_THROWS_AS(config_from_json({{"gamma", 1.5}}), Error);
  CHECK_THROWS_AS(config_from_json({{"gamma", "high"}}), Error);
  CHECK(default_config(true).total_steps == 500000);
  CHECK(default_config(true).learning_rate == 1e-3);
  CHECK(default_config(true).epochs_per_update == 10);
  CHECK(default_config(false).kl_coeff == 0.1);
  CHECK(default_config(false).total_steps == 300000);
}

TEST_CASE("checkpoint round trip and shape checks") {
  Rng rng(14);
  Checkpoint c{"find-milk", make_policy(8, 4, {8, 8}, 7.0, rng), make_value(8, {8, 8}, 7.0, rng), {}};
  const auto text = serialize_checkpoint(c);
  const auto back = deserialize_checkpoint(text);
  CHECK(back.policy.net.params() == c.policy.net.params());
  CHECK(back.value.net.params() == c.value.net.params());
  CHECK(back.policy.input_scale == 7.0);
  CHECK(serialize_checkpoint(back) == text);

  auto j = nlohmann::json::parse(text);
  j["policy"]["layers"] = {8, 9, 8, 4};
  try {
    deserialize_checkpoint(j.dump());
    FAIL("expected CheckpointFormat");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CheckpointFormat);
  }
  CHECK_THROWS_AS(deserialize_checkpoint("{}"), Error);
  CHECK_THROWS_AS(deserialize_checkpoint("not json"), Error);

  const auto path = std::filesystem::temp_directory_path() / "mrl_test_ckpt.json";
  save_checkpoint(c, path);
  CHECK_NOTHROW(load_checkpoint_for(path, 8, 4));
  try {
    load_checkpoint_for(path, 6, 3);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  std::filesystem::remove(path);
}

TEST_CASE("short training run is bit-reproducible") {
  auto train = [] {
    TrainingConfig cfg;
    cfg.rollout_length = 256;
    cfg.minibatch_size = 64;
    cfg.hidden_sizes = {16, 16};
    Rng init(21);
    PpoRun run{make_policy(8, 4, cfg.hidden_sizes, 7.0, init), make_value(8, cfg.hidden_sizes, 7.0, init),
               {}, Rng(22), 0};
    RolloutCursor cursor(envs::make_environment(envs::EnvKind::FindMilk), 100);
    int updates = 0;
    run_ppo(run, cursor, cfg, 1024, {}, [&](const UpdateLog& log) {
      ++updates;
      CHECK(log.steps == updates * 256L);
    });
    CHECK(updates == 4);
    return serialize_checkpoint({"find-milk", run.policy, run.value, cfg});
  };
  CHECK(train() == train());
}

TEST_CASE("reward scaler divides by the running std of the discounted return") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 60);
    const double gamma = 0.5 + 0.49 * rng.uniform();
    std::vector<double> rewards(n);
    std::vector<char> dones(n);
    for (int i = 0; i < n; ++i) {
      rewards[i] = (rng.uniform() - 0.3) * 50.0;
      dones[i] = rng.uniform() < 0.1;
    }

    // Oracle: population std over every discounted return seen so far.
    std::vector<double> expected(n);
    std::vector<double> returns;
    double g = 0.0;
    for (int i = 0; i < n; ++i) {
      g = g * gamma + rewards[i];
      returns.push_back(g);
      double sd = 1.0;
      if (returns.size() > 1) {
        const double mean = std::accumulate(returns.begin(), returns.end(), 0.0) / returns.size();
        double ss = 0.0;
        for (double x : returns) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / returns.size());
      }
      expected[i] = rewards[i] / (sd + 1e-8);
      if (dones[i]) g = 0.0;
    }

    RewardScaler whole;
    auto all = rewards;
    whole.scale(all, dones, gamma);
    for (int i = 0; i < n; ++i) CHECK(all[i] == doctest::Approx(expected[i]).epsilon(1e-9));

    // Splitting the stream, with a JSON round trip at the split, changes nothing.
    const int cut = n / 2;
    RewardScaler first;
    std::vector<double> a(rewards.begin(), rewards.begin() + cut), b(rewards.begin() + cut, rewards.end());
    std::vector<char> da(dones.begin(), dones.begin() + cut), db(dones.begin() + cut, dones.end());
    first.scale(a, da, gamma);
    auto second = RewardScaler::from_json(first.to_json());
    second.scale(b, db, gamma);
    a.insert(a.end(), b.begin(), b.end());
    CHECK(a == all);
    CHECK(second.scale_factor() == whole.scale_factor());
  }
  CHECK_THROWS_AS(RewardScaler::from_json({{"count", 1.0}}), Error);
}

TEST_CASE("rollout cursor snapshot resumes mid-episode exactly") {
  Rng init(5);
  const auto env = envs::make_environment(envs::EnvKind::Driving);
  const auto policy = make_policy(6, 3, {8}, env->observation_scale(), init);
  const auto value = make_value(6, {8}, env->observation_scale(), init);

  RolloutCursor original(env->clone(), 40);
  Rng r1(9);
  collect_rollout(original, policy, value, 437, {}, r1);  // stops inside the second episode
  original.take_completed();
  const auto snap = original.snapshot();

  RolloutCursor restored(env->clone(), snap);
  CHECK(restored.observation() == original.observation());
  CHECK(restored.total_steps() == original.total_steps());
  Rng r2 = r1;
  const auto a = collect_rollout(original, policy, value, 400, {}, r1);
  const auto b = collect_rollout(restored, policy, value, 400, {}, r2);
  CHECK(a.obs == b.obs);
  CHECK(a.actions == b.actions);
  CHECK(a.rewards == b.rewards);
  CHECK(a.dones == b.dones);
  const auto ea = original.take_completed();
  const auto eb = restored.take_completed();
  REQUIRE(ea.size() == eb.size());
  REQUIRE(ea.size() == 1);
  CHECK(ea[0].episode_return == eb[0].episode_return);
  CHECK(restored.snapshot() == original.snapshot());
}
