#pragma once

#include <Eigen/Dense>
#include <vector>

#include "riskbandit/common/random.hpp"

namespace riskbandit::nn {

enum class OutputActivation { Linear, BoundedSquash };

/// Fully connected network with rectifier hidden units.
///
/// All weights and biases live in one flat vector: per layer, the weight
/// matrix (out x in, column-major) followed by the bias. Optimizers,
/// checkpoints and finite-difference checks work on that vector directly.
///
/// A BoundedSquash output maps pre-activation z to mid + half * tanh(z), with
/// mid/half taken from the box, and never touches the box edges.
class Mlp {
 public:
  struct Gradients {
    Eigen::VectorXd params;  // summed over the batch
    Eigen::MatrixXd input;   // one column per sample
  };

  /// Intermediate values of a batched forward pass, consumed by backward().
  struct Trace {
    std::vector<Eigen::MatrixXd> layer_inputs;
    std::vector<Eigen::MatrixXd> hidden_pre;
    Eigen::MatrixXd output;
  };

  Mlp() = default;
  /// `widths` = {input, hidden..., output}. Parameters start at zero.
  explicit Mlp(std::vector<int> widths, OutputActivation output = OutputActivation::Linear,
               Eigen::VectorXd box_low = {}, Eigen::VectorXd box_high = {});

  /// Uniform in +-1/sqrt(fan_in) for every weight and bias.
  void init_uniform(Rng& rng);

  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  OutputActivation output_activation() const { return output_; }
  const Eigen::VectorXd& box_low() const { return box_low_; }
  const Eigen::VectorXd& box_high() const { return box_high_; }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index num_params() const { return params_.size(); }

  Eigen::Map<Eigen::MatrixXd> weight(int layer);
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<Eigen::VectorXd> bias(int layer);
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  /// Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  Trace forward_trace(const Eigen::MatrixXd& inputs) const;

  /// Gradients of sum_j <upstream_j, forward(x_j)> w.r.t. parameters and inputs.
  Gradients backward(const Trace& trace, const Eigen::MatrixXd& upstream) const;
  Gradients backward(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const;
  /// Input part of backward() only; skips the parameter gradients.
  Eigen::MatrixXd input_gradient(const Trace& trace, const Eigen::MatrixXd& upstream) const;

 private:
  void check_input(Eigen::Index rows) const;
  Eigen::MatrixXd squash(const Eigen::MatrixXd& pre) const;
  Eigen::MatrixXd output_delta(const Trace& trace, const Eigen::MatrixXd& upstream) const;
  Eigen::MatrixXd backprop(const Trace& trace, Eigen::MatrixXd delta, Eigen::VectorXd* params) const;

  std::vector<int> widths_;
  std::vector<Eigen::Index> weight_offset_;
  std::vector<Eigen::Index> bias_offset_;
  OutputActivation output_ = OutputActivation::Linear;
  Eigen::VectorXd box_low_;
  Eigen::VectorXd box_high_;
  Eigen::VectorXd params_;
};

}  // namespace riskbandit::nn
