#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mrl/random.hpp"

namespace mrl::rl {

// Fully connected network with tanh hidden layers and a linear output.
// All weights and biases live in one flat vector so optimizers and gradient
// checks can treat the parameters as a single point.
class Mlp {
 public:
  Mlp() = default;
  // layer_sizes = {input, hidden..., output}; parameters start at zero.
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  // Layer inputs recorded during a forward pass: activations[0] is the
  // network input, activations[l] the tanh output feeding layer l.
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;
  };

  // x: input_dim x batch. Returns output_dim x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;

  // Gradient of a loss with respect to the flat parameters, given the
  // loss gradient with respect to the outputs of the taped forward pass.
  Eigen::VectorXd backward(const Tape& tape, const Eigen::MatrixXd& d_out) const;

  // Orthogonal weights scaled by gains[layer]; zero biases.
  void orthogonal_init(Rng& rng, const std::vector<double>& gains);

 private:
  Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

}  // namespace mrl::rl
