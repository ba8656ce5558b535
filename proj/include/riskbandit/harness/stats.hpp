#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace riskbandit::harness {

/// Mean with a normal-approximation 95% confidence half-width (1.96 s / sqrt(n)).
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;

  double low() const { return mean - half_width; }
  double high() const { return mean + half_width; }
  bool overlaps(const MeanCi& other) const {
    return low() <= other.high() && other.low() <= high();
  }
};

MeanCi mean_ci(std::span<const double> values);

/// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Sample standard deviation (n - 1); zero for fewer than two values.
double sample_stddev(std::span<const double> values);

}  // namespace riskbandit::harness
