#include "mrl/rl/models.hpp"

#include <algorithm>
#include <cmath>

#include "mrl/error.hpp"

namespace mrl::rl {

namespace {

std::vector<int> layer_sizes(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> sizes{input};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output);
  return sizes;
}

std::vector<double> gains(std::size_t hidden_layers, double head) {
  std::vector<double> g(hidden_layers, std::sqrt(2.0));
  g.push_back(head);
  return g;
}

Eigen::MatrixXd column(std::span<const double> obs, int expected, double scale) {
  if (static_cast<int>(obs.size()) != expected) {
    throw Error(ErrorCode::ShapeMismatch, "observation has " + std::to_string(obs.size()) +
                                              " entries, model expects " + std::to_string(expected));
  }
  Eigen::MatrixXd x(expected, 1);
  for (int i = 0; i < expected; ++i) {
    const double v = obs[static_cast<std::size_t>(i)];
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "observation contains NaN or inf");
    x(i, 0) = v / scale;
  }
  return x;
}

// Column-wise log-softmax.
Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const double lse = mx + std::log((logits.col(c).array() - mx).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

}  // namespace

PolicyModel make_policy(int input_dim, int num_actions, const std::vector<int>& hidden,
                        double input_scale, Rng& rng) {
  PolicyModel m{Mlp(layer_sizes(input_dim, hidden, num_actions)), input_scale};
  m.net.orthogonal_init(rng, gains(hidden.size(), 0.01));
  return m;
}

ValueModel make_value(int input_dim, const std::vector<int>& hidden, double input_scale, Rng& rng) {
  ValueModel m{Mlp(layer_sizes(input_dim, hidden, 1)), input_scale};
  m.net.orthogonal_init(rng, gains(hidden.size(), 1.0));
  return m;
}

double Categorical::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) h -= probs[i] * log_probs[i];
  return h;
}

Categorical categorical_from_logits(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  Categorical d;
  for (double l : logits) {
    d.log_probs.push_back(l - lse);
    d.probs.push_back(std::exp(l - lse));
  }
  return d;
}

Categorical policy_forward(const PolicyModel& model, std::span<const double> obs) {
  const Eigen::MatrixXd logits =
      model.net.forward(column(obs, model.input_dim(), model.input_scale));
  return categorical_from_logits(std::span<const double>(logits.data(), logits.size()));
}

double value_forward(const ValueModel& model, std::span<const double> obs) {
  return model.net.forward(column(obs, model.input_dim(), model.input_scale))(0, 0);
}

Eigen::MatrixXd pack_inputs(const std::vector<std::vector<double>>& obs, double input_scale) {
  if (obs.empty()) return {};
  Eigen::MatrixXd x(static_cast<Eigen::Index>(obs.front().size()),
                    static_cast<Eigen::Index>(obs.size()));
  for (std::size_t c = 0; c < obs.size(); ++c) {
    if (obs[c].size() != obs.front().size()) {
      throw Error(ErrorCode::ShapeMismatch, "observations differ in length");
    }
    for (std::size_t r = 0; r < obs[c].size(); ++r) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = obs[c][r] / input_scale;
    }
  }
  return x;
}

Sample sample_action(const Categorical& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int chosen = static_cast<int>(dist.probs.size()) - 1;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    acc += dist.probs[i];
    if (u < acc) {
      chosen = static_cast<int>(i);
      break;
    }
  }
  // Rounding can leave u above the final cumulative sum; fall back to the
  // last action that carries mass.
  while (chosen > 0 && dist.probs[static_cast<std::size_t>(chosen)] <= 0.0) --chosen;
  return {chosen, dist.log_probs[static_cast<std::size_t>(chosen)]};
}

int greedy_action(const Categorical& dist) {
  return static_cast<int>(std::max_element(dist.probs.begin(), dist.probs.end()) -
                          dist.probs.begin());
}

double kl_categorical(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::ShapeMismatch, "KL arguments differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw Error(ErrorCode::SupportViolation,
                  "reference assigns zero probability to action " + std::to_string(i));
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

KlGradient kl_to_reference(const PolicyModel& policy, const PolicyModel& reference,
                           const Eigen::MatrixXd& scaled_obs) {
  Mlp::Tape tape;
  const Eigen::MatrixXd logp = log_softmax(policy.net.forward(scaled_obs, &tape));
  const Eigen::MatrixXd logq = log_softmax(reference.net.forward(scaled_obs));
  const Eigen::MatrixXd p = logp.array().exp();
  const auto n = static_cast<double>(scaled_obs.cols());

  // d KL / d logit_j = p_j * (log p_j - log q_j - KL).
  const Eigen::MatrixXd diff = logp - logq;
  const Eigen::RowVectorXd kl = (p.array() * diff.array()).colwise().sum();
  Eigen::MatrixXd d_logits = p.array() * (diff.rowwise() - kl).array();
  d_logits /= n;

  KlGradient out;
  out.mean_kl = kl.sum() / n;
  out.grad = policy.net.backward(tape, d_logits);
  return out;
}

}  // namespace mrl::rl
