#include "riskbandit/nn/adam.hpp"

#include <cmath>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::nn {

Adam::Adam(Eigen::Index size, AdamConfig config)
    : config_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
  if (config_.learning_rate <= 0.0 || config_.epsilon <= 0.0 || config_.beta1 < 0.0 ||
      config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
    throw ConfigError("invalid Adam hyperparameters");
  }
}

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("Adam: parameter/gradient size mismatch");
  }
  if (!grads.allFinite()) throw NumericError("Adam: non-finite gradient");

  ++steps_;
  const double t = static_cast<double>(steps_);
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grads;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  params.array() -= config_.learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + config_.epsilon);
}

void Adam::restore(std::int64_t steps, Eigen::VectorXd m, Eigen::VectorXd v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw IntegrityError("Adam state size mismatch");
  }
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace riskbandit::nn
