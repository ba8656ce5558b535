#include "riskbandit/harness/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::harness {

double step_violation(const Eigen::VectorXd& constraints, std::span<const ConstraintBound> bounds) {
  if (constraints.size() != static_cast<Eigen::Index>(bounds.size())) {
    throw ShapeError("constraint count differs from bound count");
  }
  double total = 0.0;
  for (std::size_t m = 0; m < bounds.size(); ++m) {
    total += hinge_violation(constraints(static_cast<Eigen::Index>(m)), bounds[m]);
  }
  return total;
}

std::vector<double> accumulated_violation(std::span<const Eigen::VectorXd> constraints,
                                          std::span<const ConstraintBound> bounds) {
  std::vector<double> gamma;
  gamma.reserve(constraints.size());
  double running = 0.0;
  for (const auto& c : constraints) {
    running += step_violation(c, bounds);
    gamma.push_back(running);
  }
  return gamma;
}

Unreliability mean_unreliability(std::span<const double> reliabilities, double epsilon) {
  if (reliabilities.empty()) return {};
  const double mean = std::accumulate(reliabilities.begin(), reliabilities.end(), 0.0) /
                      static_cast<double>(reliabilities.size());
  const double gap = (1.0 - epsilon) - mean;
  return {std::max(gap, 0.0), gap};
}

}  // namespace riskbandit::harness
