#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "riskbandit/common/constraint.hpp"

namespace riskbandit::harness {

/// Sum of constraint excesses at one step.
double step_violation(const Eigen::VectorXd& constraints, std::span<const ConstraintBound> bounds);

/// Running sum of step_violation; entry t covers steps 0..t.
std::vector<double> accumulated_violation(std::span<const Eigen::VectorXd> constraints,
                                          std::span<const ConstraintBound> bounds);

struct Unreliability {
  double clamped = 0.0;      // max((1 - eps) - mean reliability, 0)
  double signed_value = 0.0; // (1 - eps) - mean reliability
};

Unreliability mean_unreliability(std::span<const double> reliabilities, double epsilon);

}  // namespace riskbandit::harness
