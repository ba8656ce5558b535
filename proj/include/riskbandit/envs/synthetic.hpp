#pragma once

#include "riskbandit/common/random.hpp"
#include "riskbandit/envs/environment.hpp"

namespace riskbandit::envs {

struct SyntheticMetrics {
  double reward;
  double c1;
  double c2;
};

/// Noiseless quadratic reward and constraints for context s (3-d) and scalar action a.
SyntheticMetrics synthetic_mean(const Eigen::Vector3d& s, double a);

/// synthetic_mean plus independent N(0, sigma^2) noise per metric. Three
/// normals are drawn from `rng` regardless of sigma.
SyntheticMetrics synthetic_step(const Eigen::Vector3d& s, double a, double sigma, Rng& rng);

struct SyntheticConfig {
  double sigma_env = 0.2;
  double c_max = 0.3;
  double action_low = -2.0;
  double action_high = 2.0;
};

/// Contexts i.i.d. uniform on [0,1]^3, one action, two upper-bound constraints.
class SyntheticQuadraticEnv final : public Environment {
 public:
  explicit SyntheticQuadraticEnv(SyntheticConfig config = {});

  std::string name() const override { return "synthetic"; }
  int context_dim() const override { return 3; }
  ActionBox action_box() const override;
  std::vector<ConstraintBound> constraint_bounds() const override;
  void reset(std::uint64_t seed) override;
  const Eigen::VectorXd& context() const override { return context_; }
  Observation step(const Eigen::VectorXd& action) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

  const SyntheticConfig& config() const { return config_; }

 private:
  void draw_context();

  SyntheticConfig config_;
  Rng rng_;
  Eigen::VectorXd context_;
};

struct PolynomialConfig {
  int dim = 2;
  double sigma_env = 0.2;
  double c_max = 0.3;
  double action_low = -1.0;
  double action_high = 1.0;
};

struct PolynomialMetrics {
  double reward;
  double constraint;
};

/// r = sum_i s_i a_i^i and c = sum_i (-1)^i s_i a_i^i (1-based i), plus
/// N(0, sigma^2) noise on both. Two normals are drawn regardless of sigma.
PolynomialMetrics polynomial_step(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                  double sigma, Rng& rng);

/// D-dimensional contexts and actions, one upper-bound constraint.
class PolynomialEnv final : public Environment {
 public:
  explicit PolynomialEnv(PolynomialConfig config = {});

  std::string name() const override { return "polynomial"; }
  int context_dim() const override { return config_.dim; }
  ActionBox action_box() const override;
  std::vector<ConstraintBound> constraint_bounds() const override;
  void reset(std::uint64_t seed) override;
  const Eigen::VectorXd& context() const override { return context_; }
  Observation step(const Eigen::VectorXd& action) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  void draw_context();

  PolynomialConfig config_;
  Rng rng_;
  Eigen::VectorXd context_;
};

}  // namespace riskbandit::envs
