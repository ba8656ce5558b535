#pragma once

#include <Eigen/Dense>

#include "riskbandit/common/random.hpp"

namespace riskbandit::agents {

/// Ornstein-Uhlenbeck process with unit time step: x <- x - theta * x + sigma * xi.
class OuNoise {
 public:
  OuNoise() = default;
  OuNoise(Eigen::Index dim, double theta, double sigma);

  const Eigen::VectorXd& step(Rng& rng);
  void reset() { state_.setZero(); }

  const Eigen::VectorXd& state() const { return state_; }
  void set_state(Eigen::VectorXd x);
  double theta() const { return theta_; }
  double sigma() const { return sigma_; }

  /// sigma / sqrt(2 theta - theta^2), the stationary standard deviation.
  double stationary_stddev() const;

 private:
  double theta_ = 0.15;
  double sigma_ = 0.15;
  Eigen::VectorXd state_;
};

}  // namespace riskbandit::agents
