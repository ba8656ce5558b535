#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "riskbandit/agents/agent.hpp"

namespace riskbandit::harness {

struct LatencyStats {
  double mean_ms = 0.0;
  double stddev_ms = 0.0;
  std::size_t trials = 0;
};

/// Wall-clock time of one deterministic action selection, per trial.
/// Standard deviation is 0 for a single trial.
LatencyStats latency_bench(const agents::Agent& agent, const Eigen::VectorXd& context,
                           std::size_t trials = 10000, std::size_t warmup = 100);

}  // namespace riskbandit::harness
