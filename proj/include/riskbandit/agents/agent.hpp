#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskbandit/agents/ou_noise.hpp"
#include "riskbandit/agents/replay_buffer.hpp"
#include "riskbandit/agents/risk.hpp"
#include "riskbandit/common/constraint.hpp"
#include "riskbandit/common/random.hpp"
#include "riskbandit/nn/adam.hpp"
#include "riskbandit/nn/mlp.hpp"

namespace riskbandit::agents {

enum class AgentKind { Rancb, Ncb, ScDncb, McNcb };

std::string to_string(AgentKind kind);
/// Accepts "rancb", "ncb", "sc-dncb", "mc-ncb" (case-insensitive).
AgentKind parse_agent_kind(const std::string& name);

struct AgentConfig {
  AgentKind kind = AgentKind::Rancb;
  double lambda = 2.5;
  int batch_size = 64;
  double kappa = 1.0;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t buffer_capacity = 2000;
  std::vector<int> hidden{256, 256};
  /// Reward critic (and SC-DNCB critic) learns {i/N | i = 1..N}.
  int reward_quantiles = 21;
  double ou_theta = 0.15;
  double ou_sigma = 0.15;

  void validate() const;
};

/// Dimensions an agent is built for; taken from the environment.
struct ProblemShape {
  int context_dim = 0;
  ActionBox box;
  std::vector<ConstraintBound> bounds;

  int action_dim() const { return static_cast<int>(box.dim()); }
  int num_constraints() const { return static_cast<int>(bounds.size()); }
};

struct LossReport {
  std::vector<double> critic_losses;
  /// Mean aggregate objective before each actor update, averaged over updates.
  double actor_objective = 0.0;
};

/// Deterministic actor with one or more critics over (context, action).
///
/// Subclasses choose what each critic regresses on and how critic outputs
/// combine into the objective the actor ascends. The base class owns the
/// networks, optimizers, replay buffer, exploration noise and RNG streams.
class Agent {
 public:
  virtual ~Agent() = default;
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  virtual AgentKind kind() const = 0;
  const AgentConfig& config() const { return config_; }
  const RiskProfile& risk() const { return risk_; }
  const ProblemShape& shape() const { return shape_; }

  /// Deterministic actor output.
  Eigen::VectorXd policy(const Eigen::VectorXd& context, const Eigen::VectorXd& alphas) const;
  Eigen::VectorXd policy(const Eigen::VectorXd& context) const;

  /// Actor output, plus OU noise clipped to the box when exploring.
  /// `alphas` conditions the actor for risk-aware agents and is ignored otherwise.
  Eigen::VectorXd select_action(const Eigen::VectorXd& context, const Eigen::VectorXd& alphas,
                                bool explore);
  Eigen::VectorXd select_action(const Eigen::VectorXd& context, bool explore);

  /// Stores the experience and runs one train step once a full minibatch is available.
  std::optional<LossReport> observe(Experience e);
  LossReport train_step(const Batch& batch);

  std::size_t num_critics() const { return critics_.size(); }
  /// Minibatch-averaged loss of critic m.
  double critic_loss(std::size_t m, const Batch& batch) const;
  Eigen::VectorXd critic_gradient(std::size_t m, const Batch& batch) const;
  /// Minibatch mean of the objective at the actor's own actions.
  double actor_objective(const Batch& batch, const Eigen::VectorXd& alphas) const;
  /// Gradient of actor_objective w.r.t. actor parameters (ascent direction).
  Eigen::VectorXd actor_gradient(const Batch& batch, const Eigen::VectorXd& alphas) const;

  nn::Mlp& actor() { return actor_; }
  const nn::Mlp& actor() const { return actor_; }
  nn::Mlp& critic(std::size_t m) { return critics_.at(m); }
  const nn::Mlp& critic(std::size_t m) const { return critics_.at(m); }
  /// Quantile levels of critic m; empty for scalar (mean) critics.
  const std::optional<dist::QuantileSet>& critic_levels(std::size_t m) const {
    return critic_levels_.at(m);
  }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  OuNoise& noise() { return noise_; }
  std::int64_t train_steps() const { return train_steps_; }

  /// All network parameters concatenated, actor first.
  Eigen::VectorXd parameter_snapshot() const;

  nlohmann::json save_state() const;
  void load_state(const nlohmann::json& state);

 protected:
  Agent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed,
        std::vector<std::optional<dist::QuantileSet>> critic_layout, bool alpha_input);

  /// Regression target of critic m for one experience.
  virtual double critic_target(std::size_t m, const Eigen::VectorXd& metrics) const = 0;

  /// Per-sample objective from critic outputs (one matrix per critic, samples
  /// as columns); fills `upstream` with d objective / d output when non-null.
  virtual Eigen::RowVectorXd objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                                       const Eigen::VectorXd& alphas,
                                       std::vector<Eigen::MatrixXd>* upstream) const = 0;

  /// Alpha vectors driving the actor updates of one train step.
  virtual std::vector<Eigen::VectorXd> actor_update_alphas() const;

  Eigen::VectorXd critic_targets(std::size_t m, const Batch& batch) const;

  AgentConfig config_;
  RiskProfile risk_;
  ProblemShape shape_;

 private:
  Eigen::MatrixXd actor_inputs(const Eigen::MatrixXd& contexts, const Eigen::VectorXd& alphas) const;
  double actor_pass(const Batch& batch, const Eigen::VectorXd& alphas,
                    Eigen::VectorXd* gradient) const;

  bool alpha_input_;
  nn::Mlp actor_;
  nn::Adam actor_adam_;
  std::vector<nn::Mlp> critics_;
  std::vector<nn::Adam> critic_adams_;
  std::vector<std::optional<dist::QuantileSet>> critic_levels_;
  ReplayBuffer buffer_;
  OuNoise noise_;
  Rng noise_rng_;
  Rng replay_rng_;
  std::int64_t train_steps_ = 0;
};

/// Risk-aware learner: M+1 quantile critics, actor conditioned on alpha.
class RancbAgent final : public Agent {
 public:
  RancbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed);
  AgentKind kind() const override { return AgentKind::Rancb; }

 protected:
  double critic_target(std::size_t m, const Eigen::VectorXd& metrics) const override;
  Eigen::RowVectorXd objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                               const Eigen::VectorXd& alphas,
                               std::vector<Eigen::MatrixXd>* upstream) const override;
  std::vector<Eigen::VectorXd> actor_update_alphas() const override;
};

/// One scalar critic on the penalized utility, MSE.
class NcbAgent final : public Agent {
 public:
  NcbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed);
  AgentKind kind() const override { return AgentKind::Ncb; }

 protected:
  double critic_target(std::size_t m, const Eigen::VectorXd& metrics) const override;
  Eigen::RowVectorXd objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                               const Eigen::VectorXd& alphas,
                               std::vector<Eigen::MatrixXd>* upstream) const override;
};

/// One quantile critic on the penalized utility; actor ascends its mean.
class ScDncbAgent final : public Agent {
 public:
  ScDncbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed);
  AgentKind kind() const override { return AgentKind::ScDncb; }

 protected:
  double critic_target(std::size_t m, const Eigen::VectorXd& metrics) const override;
  Eigen::RowVectorXd objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                               const Eigen::VectorXd& alphas,
                               std::vector<Eigen::MatrixXd>* upstream) const override;
};

/// M+1 scalar critics; the aggregate uses critic means in place of quantiles.
class McNcbAgent final : public Agent {
 public:
  McNcbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed);
  AgentKind kind() const override { return AgentKind::McNcb; }

 protected:
  double critic_target(std::size_t m, const Eigen::VectorXd& metrics) const override;
  Eigen::RowVectorXd objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                               const Eigen::VectorXd& alphas,
                               std::vector<Eigen::MatrixXd>* upstream) const override;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const RiskProfile& risk,
                                  const ProblemShape& shape, std::uint64_t seed);

}  // namespace riskbandit::agents
