#include "riskbandit/harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::harness {

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

MeanCi mean_ci(std::span<const double> values) {
  MeanCi out;
  out.n = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  out.half_width = 1.96 * sample_stddev(values) / std::sqrt(static_cast<double>(values.size()));
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ShapeError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace riskbandit::harness
