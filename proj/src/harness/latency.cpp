#include "riskbandit/harness/latency.hpp"

#include <chrono>
#include <vector>

#include "riskbandit/common/errors.hpp"
#include "riskbandit/harness/stats.hpp"

namespace riskbandit::harness {

LatencyStats latency_bench(const agents::Agent& agent, const Eigen::VectorXd& context,
                           std::size_t trials, std::size_t warmup) {
  if (trials == 0) throw ConfigError("latency bench needs at least one trial");
  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (std::size_t i = 0; i < warmup; ++i) sink = sink + agent.policy(context)[0];

  std::vector<double> ms(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const auto start = clock::now();
    sink = sink + agent.policy(context)[0];
    ms[i] = std::chrono::duration<double, std::milli>(clock::now() - start).count();
  }
  double sum = 0.0;
  for (double v : ms) sum += v;
  return {sum / static_cast<double>(trials), trials > 1 ? sample_stddev(ms) : 0.0, trials};
}

}  // namespace riskbandit::harness
