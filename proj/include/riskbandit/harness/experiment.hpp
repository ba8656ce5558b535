#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskbandit/agents/agent.hpp"
#include "riskbandit/envs/environment.hpp"
#include "riskbandit/envs/ran_offloading.hpp"
#include "riskbandit/envs/synthetic.hpp"

namespace riskbandit::harness {

enum class EnvKind { Synthetic, Polynomial, Ran };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

struct EnvSpec {
  EnvKind kind = EnvKind::Synthetic;
  envs::SyntheticConfig synthetic;
  envs::PolynomialConfig polynomial;
  envs::RanConfig ran;
};

std::unique_ptr<envs::Environment> make_env(const EnvSpec& spec);

/// Optional overrides of the default risk profile.
struct RiskConfig {
  /// Default risk level for every constraint.
  std::optional<double> alpha;
  /// Training risk set, applied as given to every constraint.
  std::optional<std::vector<double>> train_alphas;
  std::optional<std::vector<double>> upper_levels;
  std::optional<std::vector<double>> lower_levels;
};

agents::RiskProfile build_risk_profile(const RiskConfig& config,
                                       std::span<const ConstraintBound> bounds);

struct ExperimentSpec {
  EnvSpec env;
  agents::AgentConfig agent;
  RiskConfig risk;
  int train_steps = 5000;
  int infer_steps = 500;
  std::vector<std::uint64_t> seeds{0};

  /// Throws ConfigError for inconsistent settings (no seeds, alpha outside its set, ...).
  void validate() const;
};

enum class Phase { Train, Infer };

struct StepRecord {
  std::int64_t t = 0;
  Phase phase = Phase::Train;
  Eigen::VectorXd context;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd constraints;
  double gamma = 0.0;
};

/// Per-run aggregates, recomputable from the records with summarize().
struct RunSummary {
  std::int64_t train_steps = 0;
  std::int64_t infer_steps = 0;
  double train_mean_reward = 0.0;
  double train_final_gamma = 0.0;
  double infer_mean_reward = 0.0;
  /// Mean per-step sum of constraint excesses during inference.
  double infer_mean_violation = 0.0;
  std::vector<double> infer_mean_constraints;
  // RAN environment only.
  std::optional<double> infer_mean_reliability;
  std::optional<double> infer_unreliability;
  std::optional<double> infer_unreliability_signed;
  std::optional<double> infer_mean_energy_j;

  /// Flat name -> value view used for sweep aggregation.
  std::vector<std::pair<std::string, double>> metrics() const;
  nlohmann::json to_json() const;
};

struct RunLog {
  std::uint64_t seed = 0;
  std::string env_name;
  std::vector<ConstraintBound> bounds;
  int action_dim = 0;
  std::int64_t discarded_observations = 0;
  std::vector<double> infer_alphas;
  std::vector<StepRecord> records;
  RunSummary summary;
};

/// Environment facts summarize() needs beyond the records.
struct SummaryContext {
  std::vector<ConstraintBound> bounds;
  std::optional<double> epsilon;        // set for the RAN environment
  std::optional<double> energy_scale_j; // set for the RAN environment
};

SummaryContext summary_context(const EnvSpec& spec);
RunSummary summarize(std::span<const StepRecord> records, const SummaryContext& context);

/// One seed's environment and agent, stepped through training then inference.
class Session {
 public:
  Session(const ExperimentSpec& spec, std::uint64_t seed);

  /// Explores, stores the experience and trains.
  void train(int steps);
  /// Deterministic actions; no learning. Uses the default risk levels unless `alphas` is given.
  void infer(int steps, const std::optional<Eigen::VectorXd>& alphas = std::nullopt);

  agents::Agent& agent() { return *agent_; }
  const agents::Agent& agent() const { return *agent_; }
  envs::Environment& env() { return *env_; }
  std::int64_t steps_taken() const { return t_; }
  double gamma() const { return gamma_; }
  const RunLog& log() const { return log_; }
  RunLog finish() const;

  /// Agent, environment and counters; enough to continue bit-for-bit.
  nlohmann::json checkpoint() const;
  void restore(const nlohmann::json& state);
  /// Replaces agent state only (checkpoint from another session).
  void load_agent(const nlohmann::json& state);

 private:
  void step(Phase phase, const Eigen::VectorXd& alphas);

  ExperimentSpec spec_;
  SummaryContext summary_context_;
  std::unique_ptr<envs::Environment> env_;
  std::unique_ptr<agents::Agent> agent_;
  std::int64_t t_ = 0;
  double gamma_ = 0.0;
  RunLog log_;
};

agents::ProblemShape problem_shape(const envs::Environment& env);

/// Trains then infers for one seed.
RunLog run_seed(const ExperimentSpec& spec, std::uint64_t seed);

/// run_seed for every seed, up to `jobs` at a time. Results are in seed order.
std::vector<RunLog> run(const ExperimentSpec& spec, int jobs = 1);

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace riskbandit::harness
