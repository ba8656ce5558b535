#include "riskbandit/envs/synthetic.hpp"

#include <cmath>

#include "riskbandit/common/errors.hpp"
#include "riskbandit/common/json_eigen.hpp"

namespace riskbandit::envs {

SyntheticMetrics synthetic_mean(const Eigen::Vector3d& s, double a) {
  const double shifted = a - s(2);
  return {s(0) * a * a + s(1) * a, s(0) * a * a - s(1) * a,
          s(0) * shifted * shifted - s(1) * shifted};
}

SyntheticMetrics synthetic_step(const Eigen::Vector3d& s, double a, double sigma, Rng& rng) {
  SyntheticMetrics m = synthetic_mean(s, a);
  const double n0 = standard_normal(rng);
  const double n1 = standard_normal(rng);
  const double n2 = standard_normal(rng);
  m.reward += sigma * n0;
  m.c1 += sigma * n1;
  m.c2 += sigma * n2;
  return m;
}

SyntheticQuadraticEnv::SyntheticQuadraticEnv(SyntheticConfig config)
    : config_(config), context_(Eigen::VectorXd::Zero(3)) {
  if (config_.sigma_env < 0.0) throw ConfigError("env.sigma_env must be non-negative");
  if (!(config_.action_low < config_.action_high)) throw ConfigError("env action box is empty");
}

ActionBox SyntheticQuadraticEnv::action_box() const {
  return {Eigen::VectorXd::Constant(1, config_.action_low),
          Eigen::VectorXd::Constant(1, config_.action_high)};
}

std::vector<ConstraintBound> SyntheticQuadraticEnv::constraint_bounds() const {
  return {{config_.c_max, BoundKind::Upper}, {config_.c_max, BoundKind::Upper}};
}

void SyntheticQuadraticEnv::reset(std::uint64_t seed) {
  rng_ = make_stream(seed, Stream::Env);
  draw_context();
}

void SyntheticQuadraticEnv::draw_context() {
  for (int i = 0; i < 3; ++i) context_(i) = uniform(rng_);
}

Observation SyntheticQuadraticEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw ShapeError("synthetic env takes a scalar action");
  const auto m = synthetic_step(context_.head<3>(), action(0), config_.sigma_env, rng_);
  draw_context();
  Observation obs;
  obs.reward = m.reward;
  obs.constraints = Eigen::Vector2d(m.c1, m.c2);
  return obs;
}

nlohmann::json SyntheticQuadraticEnv::save_state() const {
  return {{"rng", save_rng(rng_)}, {"context", vector_to_json(context_)}};
}

void SyntheticQuadraticEnv::load_state(const nlohmann::json& state) {
  load_rng(rng_, state.at("rng").get<std::string>());
  context_ = vector_from_json(state.at("context"));
  if (context_.size() != 3) throw IntegrityError("synthetic env context must be 3-d");
}

PolynomialMetrics polynomial_step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                  double sigma, Rng& rng) {
  if (s.size() != a.size()) throw ShapeError("polynomial env: context and action sizes differ");
  PolynomialMetrics m{0.0, 0.0};
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const int power = static_cast<int>(i) + 1;
    const double term = s(i) * std::pow(a(i), power);
    m.reward += term;
    m.constraint += (power % 2 == 0 ? 1.0 : -1.0) * term;
  }
  const double n0 = standard_normal(rng);
  const double n1 = standard_normal(rng);
  m.reward += sigma * n0;
  m.constraint += sigma * n1;
  return m;
}

PolynomialEnv::PolynomialEnv(PolynomialConfig config)
    : config_(config), context_(Eigen::VectorXd::Zero(config.dim)) {
  if (config_.dim <= 0) throw ConfigError("env.dim must be positive");
  if (config_.sigma_env < 0.0) throw ConfigError("env.sigma_env must be non-negative");
  if (!(config_.action_low < config_.action_high)) throw ConfigError("env action box is empty");
}

ActionBox PolynomialEnv::action_box() const {
  return {Eigen::VectorXd::Constant(config_.dim, config_.action_low),
          Eigen::VectorXd::Constant(config_.dim, config_.action_high)};
}

std::vector<ConstraintBound> PolynomialEnv::constraint_bounds() const {
  return {{config_.c_max, BoundKind::Upper}};
}

void PolynomialEnv::reset(std::uint64_t seed) {
  rng_ = make_stream(seed, Stream::Env);
  draw_context();
}

void PolynomialEnv::draw_context() {
  for (Eigen::Index i = 0; i < context_.size(); ++i) context_(i) = uniform(rng_);
}

Observation PolynomialEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != config_.dim) throw ShapeError("polynomial env: action dimension mismatch");
  const auto m = polynomial_step(context_, action, config_.sigma_env, rng_);
  draw_context();
  Observation obs;
  obs.reward = m.reward;
  obs.constraints = Eigen::VectorXd::Constant(1, m.constraint);
  return obs;
}

nlohmann::json PolynomialEnv::save_state() const {
  return {{"rng", save_rng(rng_)}, {"context", vector_to_json(context_)}};
}

void PolynomialEnv::load_state(const nlohmann::json& state) {
  load_rng(rng_, state.at("rng").get<std::string>());
  context_ = vector_from_json(state.at("context"));
  if (context_.size() != config_.dim) throw IntegrityError("polynomial env context size mismatch");
}

}  // namespace riskbandit::envs
