#include "riskbandit/agents/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "riskbandit/common/errors.hpp"
#include "riskbandit/common/json_eigen.hpp"

namespace riskbandit::agents {

using nlohmann::json;

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Rancb: return "rancb";
    case AgentKind::Ncb: return "ncb";
    case AgentKind::ScDncb: return "sc-dncb";
    case AgentKind::McNcb: return "mc-ncb";
  }
  return "unknown";
}

AgentKind parse_agent_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(lower.begin(), lower.end(), '_', '-');
  if (lower == "rancb") return AgentKind::Rancb;
  if (lower == "ncb") return AgentKind::Ncb;
  if (lower == "sc-dncb") return AgentKind::ScDncb;
  if (lower == "mc-ncb") return AgentKind::McNcb;
  throw ConfigError("unknown agent kind '" + name + "' (expected rancb, ncb, sc-dncb, mc-ncb)");
}

void AgentConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("agent.lambda must be positive");
  if (batch_size <= 0) throw ConfigError("agent.batch_size must be positive");
  if (!(kappa > 0.0)) throw ConfigError("agent.kappa must be positive");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) {
    throw ConfigError("agent learning rates must be positive");
  }
  if (buffer_capacity == 0) throw ConfigError("agent.buffer_capacity must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("agent.hidden widths must be positive");
  }
  if (reward_quantiles <= 0) throw ConfigError("agent.reward_quantiles must be positive");
  if (!(ou_theta > 0.0 && ou_theta <= 1.0)) throw ConfigError("agent.ou_theta must lie in (0, 1]");
  if (ou_sigma < 0.0) throw ConfigError("agent.ou_sigma must be non-negative");
}

namespace {

std::vector<int> layer_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  return widths;
}

json adam_to_json(const nn::Adam& adam) {
  return {{"steps", adam.steps()},
          {"m", vector_to_json(adam.first_moment())},
          {"v", vector_to_json(adam.second_moment())}};
}

void adam_from_json(nn::Adam& adam, const json& j) {
  adam.restore(j.at("steps").get<std::int64_t>(), vector_from_json(j.at("m")),
               vector_from_json(j.at("v")));
}

void params_from_json(nn::Mlp& net, const json& j) {
  Eigen::VectorXd p = vector_from_json(j);
  if (p.size() != net.num_params()) throw IntegrityError("network parameter count mismatch");
  net.params() = std::move(p);
}

}  // namespace

Agent::Agent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed,
             std::vector<std::optional<dist::QuantileSet>> critic_layout, bool alpha_input)
    : config_(std::move(config)),
      risk_(std::move(risk)),
      shape_(std::move(shape)),
      alpha_input_(alpha_input),
      critic_levels_(std::move(critic_layout)),
      buffer_(config_.buffer_capacity),
      noise_rng_(make_stream(seed, Stream::Noise)),
      replay_rng_(make_stream(seed, Stream::Replay)) {
  config_.validate();
  if (shape_.context_dim <= 0 || shape_.action_dim() <= 0) {
    throw ConfigError("agent needs positive context and action dimensions");
  }
  if (risk_.num_constraints() != shape_.bounds.size()) {
    throw ConfigError("risk profile constraint count differs from the environment's");
  }
  risk_.validate();

  Rng init = make_stream(seed, Stream::Init);
  const int d = shape_.action_dim();
  const int actor_in = shape_.context_dim + (alpha_input_ ? shape_.num_constraints() : 0);
  actor_ = nn::Mlp(layer_widths(actor_in, config_.hidden, d), nn::OutputActivation::BoundedSquash,
                   shape_.box.low, shape_.box.high);
  actor_.init_uniform(init);
  actor_adam_ = nn::Adam(actor_.num_params(), {.learning_rate = config_.actor_lr});

  for (const auto& levels : critic_levels_) {
    const int out = levels ? static_cast<int>(levels->size()) : 1;
    nn::Mlp critic(layer_widths(shape_.context_dim + d, config_.hidden, out));
    critic.init_uniform(init);
    critic_adams_.emplace_back(critic.num_params(), nn::AdamConfig{.learning_rate = config_.critic_lr});
    critics_.push_back(std::move(critic));
  }
  noise_ = OuNoise(d, config_.ou_theta, config_.ou_sigma);
}

Eigen::MatrixXd Agent::actor_inputs(const Eigen::MatrixXd& contexts,
                                    const Eigen::VectorXd& alphas) const {
  if (contexts.rows() != shape_.context_dim) {
    throw ShapeError("context dimension " + std::to_string(contexts.rows()) + ", agent expects " +
                     std::to_string(shape_.context_dim));
  }
  if (!alpha_input_ || shape_.num_constraints() == 0) return contexts;
  risk_.check_alphas(alphas);
  Eigen::MatrixXd in(actor_.input_width(), contexts.cols());
  in.topRows(contexts.rows()) = contexts;
  in.bottomRows(alphas.size()) = alphas.replicate(1, contexts.cols());
  return in;
}

Eigen::VectorXd Agent::policy(const Eigen::VectorXd& context, const Eigen::VectorXd& alphas) const {
  return actor_.forward(actor_inputs(context, alphas));
}

Eigen::VectorXd Agent::policy(const Eigen::VectorXd& context) const {
  return policy(context, risk_.default_alphas());
}

Eigen::VectorXd Agent::select_action(const Eigen::VectorXd& context, const Eigen::VectorXd& alphas,
                                     bool explore) {
  Eigen::VectorXd action = policy(context, alphas);
  if (explore) action = shape_.box.clip(action + noise_.step(noise_rng_));
  return action;
}

Eigen::VectorXd Agent::select_action(const Eigen::VectorXd& context, bool explore) {
  return select_action(context, risk_.default_alphas(), explore);
}

std::optional<LossReport> Agent::observe(Experience e) {
  if (e.context.size() != shape_.context_dim || e.action.size() != shape_.action_dim() ||
      e.metrics.size() != shape_.num_constraints() + 1) {
    throw ShapeError("experience shape does not match the agent");
  }
  buffer_.push(std::move(e));
  const auto b = static_cast<std::size_t>(config_.batch_size);
  if (buffer_.size() < b) return std::nullopt;
  return train_step(buffer_.sample(b, replay_rng_));
}

Eigen::VectorXd Agent::critic_targets(std::size_t m, const Batch& batch) const {
  Eigen::VectorXd targets(batch.size());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    targets(j) = critic_target(m, batch.metrics.col(j));
  }
  return targets;
}

namespace {

Eigen::MatrixXd critic_inputs(const Batch& batch) {
  Eigen::MatrixXd in(batch.contexts.rows() + batch.actions.rows(), batch.size());
  in.topRows(batch.contexts.rows()) = batch.contexts;
  in.bottomRows(batch.actions.rows()) = batch.actions;
  return in;
}

}  // namespace

double Agent::critic_loss(std::size_t m, const Batch& batch) const {
  const Eigen::MatrixXd pred = critics_.at(m).forward_batch(critic_inputs(batch));
  const Eigen::VectorXd targets = critic_targets(m, batch);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    if (critic_levels_[m]) {
      const Eigen::VectorXd col = pred.col(j);
      loss += dist::critic_loss(dist::as_span(col), targets(j), *critic_levels_[m], config_.kappa);
    } else {
      const double err = pred(0, j) - targets(j);
      loss += err * err;
    }
  }
  return loss / static_cast<double>(batch.size());
}

Eigen::VectorXd Agent::critic_gradient(std::size_t m, const Batch& batch) const {
  const auto& net = critics_.at(m);
  const auto trace = net.forward_trace(critic_inputs(batch));
  const Eigen::VectorXd targets = critic_targets(m, batch);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd upstream(net.output_width(), batch.size());
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    if (critic_levels_[m]) {
      const Eigen::VectorXd col = trace.output.col(j);
      upstream.col(j) = inv_b * dist::critic_loss_gradient(dist::as_span(col), targets(j),
                                                           *critic_levels_[m], config_.kappa);
    } else {
      upstream(0, j) = inv_b * 2.0 * (trace.output(0, j) - targets(j));
    }
  }
  return net.backward(trace, upstream).params;
}

double Agent::actor_pass(const Batch& batch, const Eigen::VectorXd& alphas,
                         Eigen::VectorXd* gradient) const {
  const auto actor_trace = actor_.forward_trace(actor_inputs(batch.contexts, alphas));
  Batch at_policy{batch.contexts, actor_trace.output, {}};
  const Eigen::MatrixXd in = critic_inputs(at_policy);

  std::vector<nn::Mlp::Trace> traces;
  std::vector<Eigen::MatrixXd> outputs;
  traces.reserve(critics_.size());
  for (const auto& critic : critics_) {
    traces.push_back(critic.forward_trace(in));
    outputs.push_back(traces.back().output);
  }
  std::vector<Eigen::MatrixXd> upstream;
  const Eigen::RowVectorXd values = objective(outputs, alphas, gradient ? &upstream : nullptr);
  const double mean = values.mean();
  if (gradient == nullptr) return mean;

  const Eigen::Index d = shape_.action_dim();
  Eigen::MatrixXd d_action = Eigen::MatrixXd::Zero(d, batch.size());
  for (std::size_t m = 0; m < critics_.size(); ++m) {
    if (upstream[m].isZero(0.0)) continue;
    d_action += critics_[m].input_gradient(traces[m], upstream[m]).bottomRows(d);
  }
  d_action /= static_cast<double>(batch.size());
  *gradient = actor_.backward(actor_trace, d_action).params;
  return mean;
}

double Agent::actor_objective(const Batch& batch, const Eigen::VectorXd& alphas) const {
  return actor_pass(batch, alphas, nullptr);
}

Eigen::VectorXd Agent::actor_gradient(const Batch& batch, const Eigen::VectorXd& alphas) const {
  Eigen::VectorXd grad;
  actor_pass(batch, alphas, &grad);
  return grad;
}

std::vector<Eigen::VectorXd> Agent::actor_update_alphas() const {
  return {risk_.default_alphas()};
}

LossReport Agent::train_step(const Batch& batch) {
  LossReport report;
  for (std::size_t m = 0; m < critics_.size(); ++m) {
    const double loss = critic_loss(m, batch);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss in critic " + std::to_string(m) + " at train step " +
                         std::to_string(train_steps_));
    }
    report.critic_losses.push_back(loss);
    critic_adams_[m].step(critics_[m].params(), critic_gradient(m, batch));
  }
  const auto alphas = actor_update_alphas();
  for (const auto& a : alphas) {
    Eigen::VectorXd grad;
    const double value = actor_pass(batch, a, &grad);
    if (!std::isfinite(value)) {
      throw NumericError("non-finite actor objective at train step " + std::to_string(train_steps_));
    }
    report.actor_objective += value / static_cast<double>(alphas.size());
    actor_adam_.step(actor_.params(), -grad);
  }
  ++train_steps_;
  return report;
}

Eigen::VectorXd Agent::parameter_snapshot() const {
  Eigen::Index total = actor_.num_params();
  for (const auto& c : critics_) total += c.num_params();
  Eigen::VectorXd out(total);
  Eigen::Index offset = 0;
  out.segment(offset, actor_.num_params()) = actor_.params();
  offset += actor_.num_params();
  for (const auto& c : critics_) {
    out.segment(offset, c.num_params()) = c.params();
    offset += c.num_params();
  }
  return out;
}

json Agent::save_state() const {
  json critics = json::array();
  for (std::size_t m = 0; m < critics_.size(); ++m) {
    critics.push_back({{"params", vector_to_json(critics_[m].params())},
                       {"adam", adam_to_json(critic_adams_[m])}});
  }
  json items = json::array();
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const auto& e = buffer_.at(i);
    items.push_back({vector_to_json(e.context), vector_to_json(e.action), vector_to_json(e.metrics)});
  }
  return {{"kind", to_string(kind())},
          {"actor", {{"params", vector_to_json(actor_.params())}, {"adam", adam_to_json(actor_adam_)}}},
          {"critics", std::move(critics)},
          {"noise", vector_to_json(noise_.state())},
          {"buffer", {{"next", buffer_.next_slot()}, {"items", std::move(items)}}},
          {"rng_noise", save_rng(noise_rng_)},
          {"rng_replay", save_rng(replay_rng_)},
          {"train_steps", train_steps_}};
}

void Agent::load_state(const json& state) {
  try {
    if (state.at("kind").get<std::string>() != to_string(kind())) {
      throw IntegrityError("checkpoint holds a '" + state.at("kind").get<std::string>() +
                           "' agent, expected '" + to_string(kind()) + "'");
    }
    params_from_json(actor_, state.at("actor").at("params"));
    adam_from_json(actor_adam_, state.at("actor").at("adam"));
    const auto& critics = state.at("critics");
    if (critics.size() != critics_.size()) throw IntegrityError("critic count mismatch");
    for (std::size_t m = 0; m < critics_.size(); ++m) {
      params_from_json(critics_[m], critics[m].at("params"));
      adam_from_json(critic_adams_[m], critics[m].at("adam"));
    }
    noise_.set_state(vector_from_json(state.at("noise")));
    std::vector<Experience> items;
    for (const auto& item : state.at("buffer").at("items")) {
      Experience e{vector_from_json(item.at(0)), vector_from_json(item.at(1)),
                   vector_from_json(item.at(2))};
      if (e.context.size() != shape_.context_dim || e.action.size() != shape_.action_dim() ||
          e.metrics.size() != shape_.num_constraints() + 1) {
        throw IntegrityError("replay buffer entry shape mismatch");
      }
      items.push_back(std::move(e));
    }
    buffer_.restore(std::move(items), state.at("buffer").at("next").get<std::size_t>());
    load_rng(noise_rng_, state.at("rng_noise").get<std::string>());
    load_rng(replay_rng_, state.at("rng_replay").get<std::string>());
    train_steps_ = state.at("train_steps").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed agent state: ") + e.what());
  }
}

// --- RANCB -------------------------------------------------------------------

namespace {

std::vector<std::optional<dist::QuantileSet>> rancb_layout(const AgentConfig& config,
                                                           const RiskProfile& risk) {
  std::vector<std::optional<dist::QuantileSet>> layout;
  layout.emplace_back(dist::QuantileSet::uniform_grid(config.reward_quantiles));
  for (const auto& c : risk.constraints) layout.emplace_back(c.levels);
  return layout;
}

std::vector<std::optional<dist::QuantileSet>> scalar_layout(std::size_t n) {
  return std::vector<std::optional<dist::QuantileSet>>(n);
}

double sign_for(BoundKind kind) { return kind == BoundKind::Upper ? 1.0 : -1.0; }

}  // namespace

RancbAgent::RancbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape,
                       std::uint64_t seed)
    : Agent(config, risk, std::move(shape), seed, rancb_layout(config, risk), true) {}

double RancbAgent::critic_target(std::size_t m, const Eigen::VectorXd& metrics) const {
  return metrics(static_cast<Eigen::Index>(m));
}

Eigen::RowVectorXd RancbAgent::objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                                         const Eigen::VectorXd& alphas,
                                         std::vector<Eigen::MatrixXd>* upstream) const {
  const Eigen::MatrixXd& reward = critic_outputs[0];
  const Eigen::Index n = reward.cols();
  Eigen::RowVectorXd values = reward.colwise().mean();
  if (upstream) {
    upstream->clear();
    upstream->push_back(Eigen::MatrixXd::Constant(reward.rows(), n, 1.0 / static_cast<double>(reward.rows())));
  }
  for (std::size_t m = 0; m < risk_.num_constraints(); ++m) {
    const auto& c = risk_.constraints[m];
    const Eigen::Index row =
        static_cast<Eigen::Index>(c.levels.index_of(alphas(static_cast<Eigen::Index>(m))));
    const Eigen::MatrixXd& out = critic_outputs[m + 1];
    Eigen::MatrixXd up;
    if (upstream) up = Eigen::MatrixXd::Zero(out.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double excess = hinge_violation(out(row, j), c.bound);
      values(j) -= config_.lambda * excess;
      if (upstream && excess > 0.0) up(row, j) = -config_.lambda * sign_for(c.bound.kind);
    }
    if (upstream) upstream->push_back(std::move(up));
  }
  return values;
}

std::vector<Eigen::VectorXd> RancbAgent::actor_update_alphas() const {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t j = 0; j < risk_.num_train_levels(); ++j) {
    out.push_back(risk_.constraints.empty() ? Eigen::VectorXd() : risk_.train_alphas(j));
  }
  return out;
}

// --- NCB ---------------------------------------------------------------------

NcbAgent::NcbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape, std::uint64_t seed)
    : Agent(std::move(config), std::move(risk), std::move(shape), seed, scalar_layout(1), false) {}

double NcbAgent::critic_target(std::size_t, const Eigen::VectorXd& metrics) const {
  const Eigen::VectorXd c = metrics.tail(metrics.size() - 1);
  return ncb_utility(metrics(0), dist::as_span(c), shape_.bounds, config_.lambda);
}

Eigen::RowVectorXd NcbAgent::objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                                       const Eigen::VectorXd&,
                                       std::vector<Eigen::MatrixXd>* upstream) const {
  if (upstream) {
    upstream->assign(1, Eigen::MatrixXd::Ones(1, critic_outputs[0].cols()));
  }
  return critic_outputs[0].row(0);
}

// --- SC-DNCB -----------------------------------------------------------------

ScDncbAgent::ScDncbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape,
                         std::uint64_t seed)
    : Agent(config, std::move(risk), std::move(shape), seed,
            {dist::QuantileSet::uniform_grid(config.reward_quantiles)}, false) {}

double ScDncbAgent::critic_target(std::size_t, const Eigen::VectorXd& metrics) const {
  const Eigen::VectorXd c = metrics.tail(metrics.size() - 1);
  return ncb_utility(metrics(0), dist::as_span(c), shape_.bounds, config_.lambda);
}

Eigen::RowVectorXd ScDncbAgent::objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                                          const Eigen::VectorXd&,
                                          std::vector<Eigen::MatrixXd>* upstream) const {
  const Eigen::MatrixXd& out = critic_outputs[0];
  if (upstream) {
    upstream->assign(1, Eigen::MatrixXd::Constant(out.rows(), out.cols(),
                                                  1.0 / static_cast<double>(out.rows())));
  }
  return out.colwise().mean();
}

// --- MC-NCB ------------------------------------------------------------------

McNcbAgent::McNcbAgent(AgentConfig config, RiskProfile risk, ProblemShape shape,
                       std::uint64_t seed)
    : Agent(std::move(config), risk, std::move(shape), seed,
            scalar_layout(risk.num_constraints() + 1), false) {}

double McNcbAgent::critic_target(std::size_t m, const Eigen::VectorXd& metrics) const {
  return metrics(static_cast<Eigen::Index>(m));
}

Eigen::RowVectorXd McNcbAgent::objective(const std::vector<Eigen::MatrixXd>& critic_outputs,
                                         const Eigen::VectorXd&,
                                         std::vector<Eigen::MatrixXd>* upstream) const {
  const Eigen::Index n = critic_outputs[0].cols();
  Eigen::RowVectorXd values = critic_outputs[0].row(0);
  if (upstream) {
    upstream->clear();
    upstream->push_back(Eigen::MatrixXd::Ones(1, n));
  }
  for (std::size_t m = 0; m < shape_.bounds.size(); ++m) {
    const auto& bound = shape_.bounds[m];
    const Eigen::MatrixXd& out = critic_outputs[m + 1];
    Eigen::MatrixXd up;
    if (upstream) up = Eigen::MatrixXd::Zero(1, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double excess = hinge_violation(out(0, j), bound);
      values(j) -= config_.lambda * excess;
      if (upstream && excess > 0.0) up(0, j) = -config_.lambda * sign_for(bound.kind);
    }
    if (upstream) upstream->push_back(std::move(up));
  }
  return values;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const RiskProfile& risk,
                                  const ProblemShape& shape, std::uint64_t seed) {
  switch (config.kind) {
    case AgentKind::Rancb: return std::make_unique<RancbAgent>(config, risk, shape, seed);
    case AgentKind::Ncb: return std::make_unique<NcbAgent>(config, risk, shape, seed);
    case AgentKind::ScDncb: return std::make_unique<ScDncbAgent>(config, risk, shape, seed);
    case AgentKind::McNcb: return std::make_unique<McNcbAgent>(config, risk, shape, seed);
  }
  throw ConfigError("unknown agent kind");
}

}  // namespace riskbandit::agents
