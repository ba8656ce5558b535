#pragma once

#include <algorithm>
#include <Eigen/Dense>

namespace riskbandit {

enum class BoundKind { Upper, Lower };

/// c <= bound (Upper) or c >= bound (Lower).
struct ConstraintBound {
  double bound = 0.0;
  BoundKind kind = BoundKind::Upper;
};

/// Positive part of the constraint excess; zero when satisfied.
inline double hinge_violation(double value, const ConstraintBound& c) {
  return c.kind == BoundKind::Upper ? std::max(value - c.bound, 0.0)
                                    : std::max(c.bound - value, 0.0);
}

/// Per-coordinate action bounds.
struct ActionBox {
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  Eigen::Index dim() const { return low.size(); }
  Eigen::VectorXd clip(const Eigen::VectorXd& a) const { return a.cwiseMax(low).cwiseMin(high); }
  bool contains(const Eigen::VectorXd& a) const {
    return a.size() == low.size() && (a.array() >= low.array()).all() &&
           (a.array() <= high.array()).all();
  }
};

}  // namespace riskbandit
