#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskbandit/common/constraint.hpp"

namespace riskbandit::envs {

/// Metrics observed after one action.
struct Observation {
  double reward = 0.0;
  Eigen::VectorXd constraints;

  bool finite() const { return std::isfinite(reward) && constraints.allFinite(); }
};

/// Contextual bandit environment: contexts are drawn independently of the
/// actions taken.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual int context_dim() const = 0;
  virtual ActionBox action_box() const = 0;
  virtual std::vector<ConstraintBound> constraint_bounds() const = 0;

  /// Reseeds the environment stream and draws the first context.
  virtual void reset(std::uint64_t seed) = 0;
  virtual const Eigen::VectorXd& context() const = 0;
  /// Applies `action` to the current context and advances to the next one.
  virtual Observation step(const Eigen::VectorXd& action) = 0;

  virtual nlohmann::json save_state() const = 0;
  virtual void load_state(const nlohmann::json& state) = 0;

  int action_dim() const { return static_cast<int>(action_box().dim()); }
  int num_constraints() const { return static_cast<int>(constraint_bounds().size()); }
};

}  // namespace riskbandit::envs
