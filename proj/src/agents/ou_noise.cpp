#include "riskbandit/agents/ou_noise.hpp"

#include <cmath>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::agents {

OuNoise::OuNoise(Eigen::Index dim, double theta, double sigma)
    : theta_(theta), sigma_(sigma), state_(Eigen::VectorXd::Zero(dim)) {
  if (!(theta_ > 0.0 && theta_ <= 1.0)) throw ConfigError("OU theta must lie in (0, 1]");
  if (sigma_ < 0.0) throw ConfigError("OU sigma must be non-negative");
}

const Eigen::VectorXd& OuNoise::step(Rng& rng) {
  for (Eigen::Index i = 0; i < state_.size(); ++i) {
    state_(i) += -theta_ * state_(i) + sigma_ * standard_normal(rng);
  }
  return state_;
}

void OuNoise::set_state(Eigen::VectorXd x) {
  if (x.size() != state_.size()) throw IntegrityError("OU state dimension mismatch");
  state_ = std::move(x);
}

double OuNoise::stationary_stddev() const {
  return sigma_ / std::sqrt(2.0 * theta_ - theta_ * theta_);
}

}  // namespace riskbandit::agents
