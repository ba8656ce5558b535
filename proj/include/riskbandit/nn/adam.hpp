#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace riskbandit::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over a flat parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, AdamConfig config);

  /// Throws NumericError (leaving params and state untouched) on a non-finite gradient.
  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads);

  const AdamConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }

  void restore(std::int64_t steps, Eigen::VectorXd m, Eigen::VectorXd v);

 private:
  AdamConfig config_;
  std::int64_t steps_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

}  // namespace riskbandit::nn
