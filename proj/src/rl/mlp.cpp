#include "mrl/rl/mlp.hpp"

#include <algorithm>

#include "mrl/error.hpp"

namespace mrl::rl {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorCode::ShapeMismatch, "network needs at least two layers");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
      throw Error(ErrorCode::ShapeMismatch, "layer sizes must be positive");
    }
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(total);
}

Eigen::Index Mlp::bias_offset(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + weight_offset(layer), sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {params_.data() + weight_offset(layer), sizes_[l + 1], sizes_[l]};
}

Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offset(layer), sizes_[static_cast<std::size_t>(layer) + 1]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset(layer), sizes_[static_cast<std::size_t>(layer) + 1]};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape* tape) const {
  if (x.rows() != input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(input_dim()) +
                                              " inputs, got " + std::to_string(x.rows()));
  }
  if (tape) tape->activations.assign(1, x);
  Eigen::MatrixXd a = x;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      a = z.array().tanh().matrix();
      if (tape) tape->activations.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::VectorXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_out) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_params());
  Eigen::MatrixXd delta = d_out;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const auto& input = tape.activations[static_cast<std::size_t>(l)];
    const auto rows = sizes_[static_cast<std::size_t>(l) + 1];
    const auto cols = sizes_[static_cast<std::size_t>(l)];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + weight_offset(l), rows, cols) = delta * input.transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + bias_offset(l), rows) = delta.rowwise().sum();
    if (l > 0) {
      delta = (weight(l).transpose() * delta).array() * (1.0 - input.array().square());
    }
  }
  return grad;
}

void Mlp::orthogonal_init(Rng& rng, const std::vector<double>& gains) {
  if (static_cast<int>(gains.size()) != num_layers()) {
    throw Error(ErrorCode::ShapeMismatch, "one gain per layer required");
  }
  for (int l = 0; l < num_layers(); ++l) {
    const int rows = sizes_[static_cast<std::size_t>(l) + 1];
    const int cols = sizes_[static_cast<std::size_t>(l)];
    const int big = std::max(rows, cols);
    const int small = std::min(rows, cols);
    Eigen::MatrixXd g(big, small);
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(big, small);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(small).template triangularView<Eigen::Upper>();
    for (int j = 0; j < small; ++j) {
      if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    const double gain = gains[static_cast<std::size_t>(l)];
    if (rows >= cols) {
      weight(l) = gain * q;
    } else {
      weight(l) = gain * q.transpose();
    }
    bias(l).setZero();
  }
}

}  // namespace mrl::rl
