#include "riskbandit/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::nn {

Mlp::Mlp(std::vector<int> widths, OutputActivation output, Eigen::VectorXd box_low,
         Eigen::VectorXd box_high)
    : widths_(std::move(widths)),
      output_(output),
      box_low_(std::move(box_low)),
      box_high_(std::move(box_high)) {
  if (widths_.size() < 2) throw ShapeError("Mlp needs at least input and output widths");
  for (int w : widths_) {
    if (w <= 0) throw ShapeError("Mlp layer widths must be positive");
  }
  if (output_ == OutputActivation::BoundedSquash) {
    if (box_low_.size() != output_width() || box_high_.size() != output_width()) {
      throw ShapeError("bounded output needs a box matching the output width");
    }
    if (((box_high_ - box_low_).array() <= 0.0).any()) {
      throw ConfigError("action box must satisfy low < high");
    }
  }
  Eigen::Index offset = 0;
  for (int l = 0; l < num_layers(); ++l) {
    weight_offset_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1];
    bias_offset_.push_back(offset);
    offset += widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

void Mlp::init_uniform(Rng& rng) {
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    auto w = weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -bound, bound);
    auto b = bias(l);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = uniform(rng, -bound, bound);
  }
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
  return {params_.data() + weight_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
  return {params_.data() + weight_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
  return {params_.data() + bias_offset_[layer], widths_[layer + 1]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
  return {params_.data() + bias_offset_[layer], widths_[layer + 1]};
}

void Mlp::check_input(Eigen::Index rows) const {
  if (rows != input_width()) {
    throw ShapeError("input width " + std::to_string(rows) + ", network expects " +
                     std::to_string(input_width()));
  }
}

Eigen::MatrixXd Mlp::squash(const Eigen::MatrixXd& pre) const {
  const Eigen::ArrayXd mid = 0.5 * (box_low_ + box_high_).array();
  const Eigen::ArrayXd half = 0.5 * (box_high_ - box_low_).array();
  Eigen::MatrixXd out(pre.rows(), pre.cols());
  for (Eigen::Index j = 0; j < pre.cols(); ++j) {
    for (Eigen::Index i = 0; i < pre.rows(); ++i) {
      const double lo = std::nextafter(box_low_(i), box_high_(i));
      const double hi = std::nextafter(box_high_(i), box_low_(i));
      out(i, j) = std::clamp(mid(i) + half(i) * std::tanh(pre(i, j)), lo, hi);
    }
  }
  return out;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  check_input(inputs.rows());
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  if (output_ == OutputActivation::BoundedSquash) return squash(a);
  return a;
}

Mlp::Trace Mlp::forward_trace(const Eigen::MatrixXd& inputs) const {
  check_input(inputs.rows());
  Trace trace;
  trace.layer_inputs.reserve(num_layers());
  trace.hidden_pre.reserve(num_layers() - 1);
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    trace.layer_inputs.push_back(std::move(a));
    if (l + 1 < num_layers()) {
      a = z.cwiseMax(0.0);
      trace.hidden_pre.push_back(std::move(z));
    } else {
      a = std::move(z);
    }
  }
  // backward() recovers tanh(z) from the squashed output.
  trace.output = output_ == OutputActivation::BoundedSquash ? squash(a) : std::move(a);
  return trace;
}

Eigen::MatrixXd Mlp::output_delta(const Trace& trace, const Eigen::MatrixXd& upstream) const {
  if (upstream.rows() != output_width() || upstream.cols() != trace.output.cols()) {
    throw ShapeError("upstream gradient shape does not match network output");
  }
  Eigen::MatrixXd delta = upstream;
  if (output_ == OutputActivation::BoundedSquash) {
    const Eigen::ArrayXd mid = 0.5 * (box_low_ + box_high_).array();
    const Eigen::ArrayXd half = 0.5 * (box_high_ - box_low_).array();
    for (Eigen::Index j = 0; j < delta.cols(); ++j) {
      const Eigen::ArrayXd t = (trace.output.col(j).array() - mid) / half;
      delta.col(j).array() *= half * (1.0 - t.square());
    }
  }
  return delta;
}

Eigen::MatrixXd Mlp::backprop(const Trace& trace, Eigen::MatrixXd delta,
                              Eigen::VectorXd* params) const {
  for (int l = num_layers() - 1; l >= 0; --l) {
    if (params != nullptr) {
      Eigen::Map<Eigen::MatrixXd> dw(params->data() + weight_offset_[l], widths_[l + 1],
                                     widths_[l]);
      dw.noalias() = delta * trace.layer_inputs[l].transpose();
      Eigen::Map<Eigen::VectorXd>(params->data() + bias_offset_[l], widths_[l + 1]) =
          delta.rowwise().sum();
    }
    Eigen::MatrixXd da = weight(l).transpose() * delta;
    if (l == 0) return da;
    delta = (trace.hidden_pre[l - 1].array() > 0.0).select(da, 0.0);
  }
  return {};
}

Mlp::Gradients Mlp::backward(const Trace& trace, const Eigen::MatrixXd& upstream) const {
  Gradients grads;
  grads.params = Eigen::VectorXd::Zero(num_params());
  grads.input = backprop(trace, output_delta(trace, upstream), &grads.params);
  return grads;
}

Eigen::MatrixXd Mlp::input_gradient(const Trace& trace, const Eigen::MatrixXd& upstream) const {
  return backprop(trace, output_delta(trace, upstream), nullptr);
}

Mlp::Gradients Mlp::backward(const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) const {
  return backward(forward_trace(x), upstream);
}

}  // namespace riskbandit::nn
