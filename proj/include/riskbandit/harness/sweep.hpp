#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "riskbandit/harness/experiment.hpp"
#include "riskbandit/harness/stats.hpp"

namespace riskbandit::harness {

enum class SweepAxis { SigmaEnv, Alpha, Lambda, Epsilon, Dim };

std::string to_string(SweepAxis axis);
/// Accepts sigma_env, alpha, lambda, epsilon, dim.
SweepAxis parse_sweep_axis(const std::string& name);

/// Rejects values invalid for the axis before any run starts (ConfigError).
void validate_sweep(const ExperimentSpec& spec, SweepAxis axis, std::span<const double> values);

/// Copy of `spec` with the axis parameter set. For alpha this sets the risk
/// level used for exploration and inference.
ExperimentSpec with_axis_value(const ExperimentSpec& spec, SweepAxis axis, double value);

struct SweepCell {
  double value = 0.0;
  std::vector<RunLog> runs;
  std::vector<std::string> failures;
};

struct SweepRow {
  double value = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  std::vector<std::pair<std::string, MeanCi>> metrics;

  const MeanCi& metric(const std::string& name) const;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::SigmaEnv;
  std::vector<SweepCell> cells;

  std::vector<SweepRow> table() const;
};

/// Runs values x seeds. An alpha sweep trains one agent per seed (at the
/// configured risk level) and evaluates it at every alpha on the same
/// post-training environment state. A failed run is recorded, not fatal.
SweepResult sweep(const ExperimentSpec& spec, SweepAxis axis, const std::vector<double>& values,
                  int jobs = 1);

/// Inference-only continuation of a trained session at several risk levels;
/// each returned log holds the shared training records plus its own inference.
std::vector<RunLog> evaluate_alphas(const ExperimentSpec& spec, std::uint64_t seed,
                                    const std::vector<double>& alphas);

}  // namespace riskbandit::harness
