#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskbandit/common/constraint.hpp"
#include "riskbandit/dist/quantile.hpp"

namespace riskbandit::agents {

/// Risk settings of one constraint: bound, the quantile levels its critic
/// learns, the default risk level, and the levels the actor is trained on.
struct ConstraintRisk {
  ConstraintBound bound;
  dist::QuantileSet levels;
  double alpha = 0.995;
  std::vector<double> train_alphas;
};

struct RiskProfile {
  std::vector<ConstraintRisk> constraints;

  std::size_t num_constraints() const { return constraints.size(); }
  /// Number of actor updates per train step (at least 1, also when M = 0).
  std::size_t num_train_levels() const;
  Eigen::VectorXd default_alphas() const;
  /// alpha vector for the j-th actor update.
  Eigen::VectorXd train_alphas(std::size_t j) const;
  /// Throws ConfigError unless every alpha is in its set and train lists agree in length.
  void validate() const;
  /// Throws ConfigError unless each entry is a member of its constraint's set.
  void check_alphas(const Eigen::VectorXd& alphas) const;
};

/// Default profile: alpha 0.995 on the upper-tail set for upper bounds, alpha
/// 0.005 on the lower-tail set for lower bounds; the actor trains on every
/// level of the set, paired by position with upper-tail order.
RiskProfile default_risk_profile(std::span<const ConstraintBound> bounds);

struct ConstraintTerm {
  double value;  // gamma^alpha estimate, or a critic mean / observed metric
  ConstraintBound bound;
};

/// mean_reward - lambda * sum of hinge violations.
double aggregate_reward(double mean_reward, std::span<const ConstraintTerm> terms,
                        double lambda);

/// Observed-metric utility used by the single-critic baselines.
double ncb_utility(double reward, std::span<const double> constraints,
                   std::span<const ConstraintBound> bounds, double lambda);

}  // namespace riskbandit::agents
