#include "riskbandit/agents/risk.hpp"

#include "riskbandit/common/errors.hpp"

namespace riskbandit::agents {

std::size_t RiskProfile::num_train_levels() const {
  if (constraints.empty()) return 1;
  return constraints.front().train_alphas.size();
}

Eigen::VectorXd RiskProfile::default_alphas() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(constraints.size()));
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    out(static_cast<Eigen::Index>(m)) = constraints[m].alpha;
  }
  return out;
}

Eigen::VectorXd RiskProfile::train_alphas(std::size_t j) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(constraints.size()));
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    out(static_cast<Eigen::Index>(m)) = constraints[m].train_alphas.at(j);
  }
  return out;
}

void RiskProfile::validate() const {
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    const auto& c = constraints[m];
    if (c.levels.size() == 0) throw ConfigError("constraint critic has no quantile levels");
    c.levels.index_of(c.alpha);
    if (c.train_alphas.empty()) throw ConfigError("training risk set must not be empty");
    if (c.train_alphas.size() != constraints.front().train_alphas.size()) {
      throw ConfigError("training risk sets must have the same length for every constraint");
    }
    for (double a : c.train_alphas) c.levels.index_of(a);
  }
}

void RiskProfile::check_alphas(const Eigen::VectorXd& alphas) const {
  if (alphas.size() != static_cast<Eigen::Index>(constraints.size())) {
    throw ShapeError("alpha vector needs one entry per constraint");
  }
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    constraints[m].levels.index_of(alphas(static_cast<Eigen::Index>(m)));
  }
}

RiskProfile default_risk_profile(std::span<const ConstraintBound> bounds) {
  RiskProfile profile;
  const auto upper = dist::QuantileSet::upper_tail();
  for (const auto& b : bounds) {
    ConstraintRisk risk;
    risk.bound = b;
    if (b.kind == BoundKind::Upper) {
      risk.levels = upper;
      risk.alpha = 0.995;
      risk.train_alphas = upper.levels();
    } else {
      risk.levels = dist::QuantileSet::lower_tail();
      risk.alpha = 1.0 - 0.995;
      for (double tau : upper.levels()) risk.train_alphas.push_back(1.0 - tau);
    }
    profile.constraints.push_back(std::move(risk));
  }
  return profile;
}

double aggregate_reward(double mean_reward, std::span<const ConstraintTerm> terms,
                        double lambda) {
  double penalty = 0.0;
  for (const auto& t : terms) penalty += hinge_violation(t.value, t.bound);
  return mean_reward - lambda * penalty;
}

double ncb_utility(double reward, std::span<const double> constraints,
                   std::span<const ConstraintBound> bounds, double lambda) {
  if (constraints.size() != bounds.size()) {
    throw ShapeError("ncb_utility: constraint count differs from bound count");
  }
  double penalty = 0.0;
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    penalty += hinge_violation(constraints[m], bounds[m]);
  }
  return reward - lambda * penalty;
}

}  // namespace riskbandit::agents
