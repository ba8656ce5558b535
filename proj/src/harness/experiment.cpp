#include "riskbandit/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <thread>

#include "riskbandit/common/errors.hpp"
#include "riskbandit/common/json_eigen.hpp"
#include "riskbandit/harness/metrics.hpp"

namespace riskbandit::harness {

using nlohmann::json;

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::Synthetic: return "synthetic";
    case EnvKind::Polynomial: return "polynomial";
    case EnvKind::Ran: return "ran";
  }
  return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "synthetic") return EnvKind::Synthetic;
  if (lower == "polynomial") return EnvKind::Polynomial;
  if (lower == "ran") return EnvKind::Ran;
  throw ConfigError("unknown env kind '" + name + "' (expected synthetic, polynomial, ran)");
}

std::unique_ptr<envs::Environment> make_env(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::Synthetic: return std::make_unique<envs::SyntheticQuadraticEnv>(spec.synthetic);
    case EnvKind::Polynomial: return std::make_unique<envs::PolynomialEnv>(spec.polynomial);
    case EnvKind::Ran: return std::make_unique<envs::RanOffloadingEnv>(spec.ran);
  }
  throw ConfigError("unknown env kind");
}

agents::RiskProfile build_risk_profile(const RiskConfig& config,
                                       std::span<const ConstraintBound> bounds) {
  agents::RiskProfile profile = agents::default_risk_profile(bounds);
  for (auto& c : profile.constraints) {
    const bool upper = c.bound.kind == BoundKind::Upper;
    const auto& levels = upper ? config.upper_levels : config.lower_levels;
    if (levels) {
      c.levels = dist::QuantileSet(*levels);
      c.train_alphas = c.levels.levels();
      if (!upper) std::reverse(c.train_alphas.begin(), c.train_alphas.end());
    }
    if (config.alpha) c.alpha = *config.alpha;
    if (config.train_alphas) c.train_alphas = *config.train_alphas;
  }
  profile.validate();
  return profile;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("experiment.seeds must list at least one seed");
  if (train_steps < 0 || infer_steps < 0) throw ConfigError("experiment step counts must be >= 0");
  agent.validate();
  auto env_instance = make_env(env);
  build_risk_profile(risk, env_instance->constraint_bounds());
}

std::vector<std::pair<std::string, double>> RunSummary::metrics() const {
  std::vector<std::pair<std::string, double>> out{
      {"train_mean_reward", train_mean_reward},
      {"train_final_gamma", train_final_gamma},
      {"infer_mean_reward", infer_mean_reward},
      {"infer_mean_violation", infer_mean_violation},
  };
  for (std::size_t m = 0; m < infer_mean_constraints.size(); ++m) {
    out.emplace_back("infer_mean_c" + std::to_string(m + 1), infer_mean_constraints[m]);
  }
  if (infer_mean_reliability) out.emplace_back("infer_mean_reliability", *infer_mean_reliability);
  if (infer_unreliability) out.emplace_back("infer_unreliability", *infer_unreliability);
  if (infer_unreliability_signed) {
    out.emplace_back("infer_unreliability_signed", *infer_unreliability_signed);
  }
  if (infer_mean_energy_j) out.emplace_back("infer_mean_energy_j", *infer_mean_energy_j);
  return out;
}

json RunSummary::to_json() const {
  json j = {{"train_steps", train_steps}, {"infer_steps", infer_steps}};
  for (const auto& [name, value] : metrics()) j[name] = value;
  return j;
}

SummaryContext summary_context(const EnvSpec& spec) {
  SummaryContext ctx;
  ctx.bounds = make_env(spec)->constraint_bounds();
  if (spec.kind == EnvKind::Ran) {
    ctx.epsilon = spec.ran.epsilon;
    ctx.energy_scale_j = spec.ran.energy_scale_j;
  }
  return ctx;
}

RunSummary summarize(std::span<const StepRecord> records, const SummaryContext& context) {
  RunSummary s;
  const std::size_t m_count = context.bounds.size();
  s.infer_mean_constraints.assign(m_count, 0.0);
  double train_reward = 0.0;
  double infer_reward = 0.0;
  double infer_violation = 0.0;
  std::vector<double> reliabilities;
  for (const auto& r : records) {
    if (r.phase == Phase::Train) {
      ++s.train_steps;
      train_reward += r.reward;
      s.train_final_gamma = r.gamma;
    } else {
      ++s.infer_steps;
      infer_reward += r.reward;
      infer_violation += step_violation(r.constraints, context.bounds);
      for (std::size_t m = 0; m < m_count; ++m) {
        s.infer_mean_constraints[m] += r.constraints(static_cast<Eigen::Index>(m));
      }
      if (context.epsilon) reliabilities.push_back(r.constraints(0));
    }
  }
  if (s.train_steps > 0) s.train_mean_reward = train_reward / static_cast<double>(s.train_steps);
  if (s.infer_steps > 0) {
    const double n = static_cast<double>(s.infer_steps);
    s.infer_mean_reward = infer_reward / n;
    s.infer_mean_violation = infer_violation / n;
    for (double& c : s.infer_mean_constraints) c /= n;
  }
  if (context.epsilon) {
    const auto u = mean_unreliability(reliabilities, *context.epsilon);
    s.infer_mean_reliability = s.infer_steps > 0 ? s.infer_mean_constraints[0] : 1.0;
    s.infer_unreliability = u.clamped;
    s.infer_unreliability_signed = u.signed_value;
    s.infer_mean_energy_j = -s.infer_mean_reward * context.energy_scale_j.value_or(1.0);
  }
  return s;
}

agents::ProblemShape problem_shape(const envs::Environment& env) {
  return {env.context_dim(), env.action_box(), env.constraint_bounds()};
}

Session::Session(const ExperimentSpec& spec, std::uint64_t seed)
    : spec_(spec), summary_context_(summary_context(spec.env)), env_(make_env(spec.env)) {
  spec_.agent.validate();
  const auto shape = problem_shape(*env_);
  const auto risk = build_risk_profile(spec_.risk, shape.bounds);
  agent_ = agents::make_agent(spec_.agent, risk, shape, seed);
  env_->reset(seed);
  log_.seed = seed;
  log_.env_name = env_->name();
  log_.bounds = shape.bounds;
  log_.action_dim = shape.action_dim();
  log_.records.reserve(static_cast<std::size_t>(spec_.train_steps + spec_.infer_steps));
}

void Session::step(Phase phase, const Eigen::VectorXd& alphas) {
  const Eigen::VectorXd context = env_->context();
  const Eigen::VectorXd action = agent_->select_action(context, alphas, phase == Phase::Train);
  const envs::Observation obs = env_->step(action);
  const std::int64_t t = t_++;
  if (!obs.finite()) {
    ++log_.discarded_observations;
    return;
  }
  gamma_ += step_violation(obs.constraints, log_.bounds);
  log_.records.push_back({t, phase, context, action, obs.reward, obs.constraints, gamma_});
  if (phase == Phase::Train) {
    Eigen::VectorXd metrics(obs.constraints.size() + 1);
    metrics << obs.reward, obs.constraints;
    agent_->observe({context, action, std::move(metrics)});
  }
}

void Session::train(int steps) {
  const Eigen::VectorXd alphas = agent_->risk().default_alphas();
  for (int i = 0; i < steps; ++i) step(Phase::Train, alphas);
}

void Session::infer(int steps, const std::optional<Eigen::VectorXd>& alphas) {
  const Eigen::VectorXd a = alphas.value_or(agent_->risk().default_alphas());
  if (agent_->kind() == agents::AgentKind::Rancb) agent_->risk().check_alphas(a);
  log_.infer_alphas.assign(a.data(), a.data() + a.size());
  for (int i = 0; i < steps; ++i) step(Phase::Infer, a);
}

RunLog Session::finish() const {
  RunLog out = log_;
  out.summary = summarize(out.records, summary_context_);
  return out;
}

namespace {

json shape_json(const agents::ProblemShape& shape) {
  return {{"context_dim", shape.context_dim},
          {"action_dim", shape.action_dim()},
          {"constraints", shape.num_constraints()}};
}

}  // namespace

json Session::checkpoint() const {
  return {{"agent_kind", agents::to_string(agent_->kind())},
          {"shape", shape_json(agent_->shape())},
          {"t", t_},
          {"gamma", gamma_},
          {"discarded", log_.discarded_observations},
          {"agent", agent_->save_state()},
          {"env", env_->save_state()}};
}

void Session::load_agent(const json& state) {
  try {
    const auto kind = state.at("agent_kind").get<std::string>();
    if (kind != agents::to_string(agent_->kind())) {
      throw ConfigError("checkpoint holds a '" + kind + "' agent but the config asks for '" +
                        agents::to_string(agent_->kind()) + "'");
    }
    if (state.at("shape") != shape_json(agent_->shape())) {
      throw ConfigError("checkpoint dimensions " + state.at("shape").dump() +
                        " do not match the configured environment " +
                        shape_json(agent_->shape()).dump());
    }
    agent_->load_state(state.at("agent"));
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed checkpoint: ") + e.what());
  }
}

void Session::restore(const json& state) {
  load_agent(state);
  try {
    env_->load_state(state.at("env"));
    t_ = state.at("t").get<std::int64_t>();
    gamma_ = state.at("gamma").get<double>();
    log_.discarded_observations = state.at("discarded").get<std::int64_t>();
    log_.records.clear();
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed checkpoint: ") + e.what());
  }
}

RunLog run_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  Session session(spec, seed);
  session.train(spec.train_steps);
  session.infer(spec.infer_steps);
  return session.finish();
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<RunLog> run(const ExperimentSpec& spec, int jobs) {
  spec.validate();
  std::vector<RunLog> logs(spec.seeds.size());
  parallel_for(spec.seeds.size(), jobs,
               [&](std::size_t i) { logs[i] = run_seed(spec, spec.seeds[i]); });
  return logs;
}

}  // namespace riskbandit::harness
