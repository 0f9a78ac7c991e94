#include "mrl/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mrl/error.hpp"

namespace mrl::rl {

void RolloutBuffer::clear() { *this = RolloutBuffer{}; }

void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda) {
  const std::size_t n = buffer.size();
  if (n == 0) throw Error(ErrorCode::EmptyBuffer, "cannot compute advantages of an empty buffer");
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = buffer.last_value;
  for (std::size_t i = n; i-- > 0;) {
    const double live = buffer.dones[i] ? 0.0 : 1.0;
    const double delta = buffer.rewards[i] + gamma * next_value * live - buffer.values[i];
    next_adv = delta + gamma * gae_lambda * live * next_adv;
    buffer.advantages[i] = next_adv;
    buffer.returns[i] = next_adv + buffer.values[i];
    next_value = buffer.values[i];
  }
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& s, double lr,
               double epsilon, double beta1, double beta2) {
  if (s.m.size() != params.size()) {
    s.m = Eigen::VectorXd::Zero(params.size());
    s.v = Eigen::VectorXd::Zero(params.size());
    s.t = 0;
  }
  ++s.t;
  s.m = beta1 * s.m + (1.0 - beta1) * grad;
  s.v = beta2 * s.v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(s.t));
  const double step = lr * std::sqrt(c2) / c1;
  params.array() -= step * s.m.array() / (s.v.array().sqrt() + epsilon);
}

LossResult ppo_loss(const PolicyModel& policy, const ValueModel& value, const LossBatch& batch,
                    const TrainingConfig& config) {
  const auto b = static_cast<Eigen::Index>(batch.actions.size());
  const double inv_b = 1.0 / static_cast<double>(b);
  const double eps = config.clip_epsilon;
  LossResult out;

  Mlp::Tape ptape;
  const Eigen::MatrixXd logits = policy.net.forward(batch.obs / policy.input_scale, &ptape);
  Eigen::MatrixXd d_logits = Eigen::MatrixXd::Zero(logits.rows(), b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto dist = categorical_from_logits(
        std::span<const double>(logits.col(c).data(), static_cast<std::size_t>(logits.rows())));
    const auto i = static_cast<std::size_t>(c);
    const int a = batch.actions[i];
    const double adv = batch.advantages[i];
    const double log_ratio = dist.log_probs[static_cast<std::size_t>(a)] - batch.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    const double surrogate = -adv * ratio;
    const double surrogate_clipped = -adv * clipped;

    double d_logp = 0.0;  // d policy_loss / d log pi(a|s), before averaging
    if (surrogate >= surrogate_clipped) {
      out.policy_loss += surrogate;
      d_logp = -adv * ratio;
    } else {
      out.policy_loss += surrogate_clipped;
      d_logp = (ratio > 1.0 - eps && ratio < 1.0 + eps) ? -adv * ratio : 0.0;
    }
    out.mean_ratio += ratio;
    out.approx_kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > eps) out.clip_fraction += 1.0;

    const double h = dist.entropy();
    out.entropy += h;
    for (Eigen::Index j = 0; j < logits.rows(); ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const double p = dist.probs[ju];
      const double onehot = j == a ? 1.0 : 0.0;
      // Surrogate through log pi(a|s); entropy bonus enters with a minus sign.
      const double d_entropy = -p * (dist.log_probs[ju] + h);
      d_logits(j, c) = inv_b * (d_logp * (onehot - p) - config.entropy_coeff * d_entropy);
    }
  }
  out.policy_loss *= inv_b;
  out.entropy *= inv_b;
  out.mean_ratio *= inv_b;
  out.approx_kl *= inv_b;
  out.clip_fraction *= inv_b;
  out.policy_grad = policy.net.backward(ptape, d_logits);

  Mlp::Tape vtape;
  const Eigen::MatrixXd v = value.net.forward(batch.obs / value.input_scale, &vtape);
  Eigen::MatrixXd d_v = Eigen::MatrixXd::Zero(1, b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double pred = v(0, c);
    const double target = batch.returns[i];
    const double err = pred - target;
    double loss = err * err;
    double grad = err;
    if (config.clip_value) {
      const double delta = pred - batch.old_values[i];
      const double clipped_pred = batch.old_values[i] + std::clamp(delta, -eps, eps);
      const double err_clipped = clipped_pred - target;
      if (err_clipped * err_clipped > loss) {
        loss = err_clipped * err_clipped;
        grad = (delta > -eps && delta < eps) ? err_clipped : 0.0;
      }
    }
    out.value_loss += 0.5 * loss;
    d_v(0, c) = config.value_coeff * inv_b * grad;
  }
  out.value_loss *= inv_b;
  out.value_grad = value.net.backward(vtape, d_v);

  out.total = out.policy_loss - config.entropy_coeff * out.entropy +
              config.value_coeff * out.value_loss;
  return out;
}

namespace {

void clip_norm(Eigen::VectorXd& g, double max_norm) {
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / (n + 1e-6);
}

}  // namespace

UpdateResult ppo_update(const PolicyModel& policy, const ValueModel& value,
                        const RolloutBuffer& buffer, const TrainingConfig& config,
                        OptimizerState& optimizer, Rng& rng, const KlAnchor& anchor) {
  const std::size_t n = buffer.size();
  const auto mb = static_cast<std::size_t>(config.minibatch_size);
  if (n == 0 || n < mb) throw Error(ErrorCode::EmptyBuffer, "buffer smaller than one minibatch");
  if (buffer.advantages.size() != n) {
    throw Error(ErrorCode::EmptyBuffer, "advantages have not been computed");
  }

  const double mean = std::accumulate(buffer.advantages.begin(), buffer.advantages.end(), 0.0) /
                      static_cast<double>(n);
  double var = 0.0;
  for (double a : buffer.advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n > 1 ? n - 1 : 1));
  std::vector<double> adv(n);
  for (std::size_t i = 0; i < n; ++i) adv[i] = (buffer.advantages[i] - mean) / (sd + 1e-8);
  const double anchor_coeff = anchor.coeff / (sd + 1e-8);

  UpdateResult result{policy, value, {}};
  OptimizerState opt = optimizer;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t obs_dim = buffer.obs.front().size();

  for (int epoch = 0; epoch < config.epochs_per_update; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t start = 0; start + mb <= n; start += mb) {
      LossBatch batch;
      batch.obs.resize(static_cast<Eigen::Index>(obs_dim), static_cast<Eigen::Index>(mb));
      for (std::size_t k = 0; k < mb; ++k) {
        const std::size_t idx = order[start + k];
        for (std::size_t r = 0; r < obs_dim; ++r) {
          batch.obs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = buffer.obs[idx][r];
        }
        batch.actions.push_back(buffer.actions[idx]);
        batch.old_log_probs.push_back(buffer.log_probs[idx]);
        batch.advantages.push_back(adv[idx]);
        batch.returns.push_back(buffer.returns[idx]);
        batch.old_values.push_back(buffer.values[idx]);
      }
      LossResult loss = ppo_loss(result.policy, result.value, batch, config);
      double reference_kl = 0.0;
      if (anchor.reference && anchor.coeff > 0.0) {
        const auto kl = kl_to_reference(result.policy, *anchor.reference,
                                        batch.obs / result.policy.input_scale);
        reference_kl = kl.mean_kl;
        loss.total += anchor_coeff * kl.mean_kl;
        loss.policy_grad += anchor_coeff * kl.grad;
      }
      if (!std::isfinite(loss.total) || !loss.policy_grad.allFinite() ||
          !loss.value_grad.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite loss in epoch " << epoch << " minibatch at " << start
            << " (policy " << loss.policy_loss << ", value " << loss.value_loss << ", entropy "
            << loss.entropy << ", mean ratio " << loss.mean_ratio << ")";
        throw Error(ErrorCode::NonFiniteLoss, msg.str());
      }
      clip_norm(loss.policy_grad, config.max_grad_norm);
      clip_norm(loss.value_grad, config.max_grad_norm);
      adam_step(result.policy.net.params(), loss.policy_grad, opt.policy, config.learning_rate,
                config.adam_epsilon);
      adam_step(result.value.net.params(), loss.value_grad, opt.value, config.learning_rate,
                config.adam_epsilon);

      auto& s = result.stats;
      s.policy_loss += loss.policy_loss;
      s.value_loss += loss.value_loss;
      s.entropy += loss.entropy;
      s.mean_ratio += loss.mean_ratio;
      s.clip_fraction += loss.clip_fraction;
      s.approx_kl += loss.approx_kl;
      s.reference_kl += reference_kl;
      ++s.minibatches;
    }
  }
  auto& s = result.stats;
  if (s.minibatches > 0) {
    const double k = 1.0 / s.minibatches;
    s.policy_loss *= k;
    s.value_loss *= k;
    s.entropy *= k;
    s.mean_ratio *= k;
    s.clip_fraction *= k;
    s.approx_kl *= k;
    s.reference_kl *= k;
  }
  optimizer = std::move(opt);
  return result;
}

}  // namespace mrl::rl
