#include "riskbandit/harness/sweep.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::harness {

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::SigmaEnv: return "sigma_env";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Lambda: return "lambda";
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::Dim: return "dim";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "sigma_env") return SweepAxis::SigmaEnv;
  if (name == "alpha") return SweepAxis::Alpha;
  if (name == "lambda") return SweepAxis::Lambda;
  if (name == "epsilon") return SweepAxis::Epsilon;
  if (name == "dim") return SweepAxis::Dim;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected sigma_env, alpha, lambda, epsilon, dim)");
}

ExperimentSpec with_axis_value(const ExperimentSpec& spec, SweepAxis axis, double value) {
  ExperimentSpec out = spec;
  switch (axis) {
    case SweepAxis::SigmaEnv:
      out.env.synthetic.sigma_env = value;
      out.env.polynomial.sigma_env = value;
      break;
    case SweepAxis::Alpha: out.risk.alpha = value; break;
    case SweepAxis::Lambda: out.agent.lambda = value; break;
    case SweepAxis::Epsilon: out.env.ran.epsilon = value; break;
    case SweepAxis::Dim: out.env.polynomial.dim = static_cast<int>(value); break;
  }
  return out;
}

void validate_sweep(const ExperimentSpec& spec, SweepAxis axis, std::span<const double> values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  switch (axis) {
    case SweepAxis::SigmaEnv:
      if (spec.env.kind == EnvKind::Ran) {
        throw ConfigError("sweep axis sigma_env applies to the synthetic and polynomial envs");
      }
      break;
    case SweepAxis::Epsilon:
      if (spec.env.kind != EnvKind::Ran) throw ConfigError("sweep axis epsilon applies to the ran env");
      break;
    case SweepAxis::Dim:
      if (spec.env.kind != EnvKind::Polynomial) {
        throw ConfigError("sweep axis dim applies to the polynomial env");
      }
      for (double v : values) {
        if (v != static_cast<double>(static_cast<int>(v)) || v < 1) {
          throw ConfigError("sweep axis dim needs positive integer values");
        }
      }
      break;
    case SweepAxis::Alpha:
      if (spec.agent.kind != agents::AgentKind::Rancb) {
        throw ConfigError("sweep axis alpha needs agent.kind = rancb");
      }
      break;
    case SweepAxis::Lambda: break;
  }
  for (double v : values) with_axis_value(spec, axis, v).validate();
}

const MeanCi& SweepRow::metric(const std::string& name) const {
  for (const auto& [key, stat] : metrics) {
    if (key == name) return stat;
  }
  throw std::out_of_range("sweep row has no metric '" + name + "'");
}

std::vector<SweepRow> SweepResult::table() const {
  std::vector<SweepRow> rows;
  for (const auto& cell : cells) {
    SweepRow row;
    row.value = cell.value;
    row.runs = cell.runs.size();
    row.failures = cell.failures.size();
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> samples;
    for (const auto& run : cell.runs) {
      for (const auto& [name, value] : run.summary.metrics()) {
        if (!samples.contains(name)) order.push_back(name);
        samples[name].push_back(value);
      }
    }
    for (const auto& name : order) row.metrics.emplace_back(name, mean_ci(samples[name]));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RunLog> evaluate_alphas(const ExperimentSpec& spec, std::uint64_t seed,
                                    const std::vector<double>& alphas) {
  Session trained(spec, seed);
  trained.train(spec.train_steps);
  const auto state = trained.checkpoint();
  const RunLog training = trained.finish();
  const auto context = summary_context(spec.env);

  std::vector<RunLog> out;
  for (double alpha : alphas) {
    Session session(spec, seed);
    session.restore(state);
    const Eigen::VectorXd a =
        Eigen::VectorXd::Constant(session.agent().risk().num_constraints(), alpha);
    session.infer(spec.infer_steps, a);
    RunLog log = session.finish();
    log.records.insert(log.records.begin(), training.records.begin(), training.records.end());
    log.discarded_observations = training.discarded_observations + log.discarded_observations;
    log.summary = summarize(log.records, context);
    out.push_back(std::move(log));
  }
  return out;
}

SweepResult sweep(const ExperimentSpec& spec, SweepAxis axis, const std::vector<double>& values,
                  int jobs) {
  validate_sweep(spec, axis, values);
  SweepResult result;
  result.axis = axis;
  for (double v : values) result.cells.push_back({v, {}, {}});
  const std::size_t n_seeds = spec.seeds.size();

  // Slots keep seed order independent of scheduling.
  std::vector<std::vector<std::optional<RunLog>>> slots(values.size(),
                                                        std::vector<std::optional<RunLog>>(n_seeds));
  std::vector<std::vector<std::string>> errors(values.size(), std::vector<std::string>(n_seeds));

  auto describe = [](std::uint64_t seed, const std::exception& e) {
    std::ostringstream os;
    os << "seed " << seed << ": " << e.what();
    return os.str();
  };

  if (axis == SweepAxis::Alpha) {
    parallel_for(n_seeds, jobs, [&](std::size_t s) {
      try {
        auto logs = evaluate_alphas(spec, spec.seeds[s], values);
        for (std::size_t v = 0; v < values.size(); ++v) slots[v][s] = std::move(logs[v]);
      } catch (const std::exception& e) {
        for (std::size_t v = 0; v < values.size(); ++v) errors[v][s] = describe(spec.seeds[s], e);
      }
    });
  } else {
    parallel_for(values.size() * n_seeds, jobs, [&](std::size_t i) {
      const std::size_t v = i / n_seeds;
      const std::size_t s = i % n_seeds;
      try {
        slots[v][s] = run_seed(with_axis_value(spec, axis, values[v]), spec.seeds[s]);
      } catch (const std::exception& e) {
        errors[v][s] = describe(spec.seeds[s], e);
      }
    });
  }

  for (std::size_t v = 0; v < values.size(); ++v) {
    for (std::size_t s = 0; s < n_seeds; ++s) {
      if (slots[v][s]) result.cells[v].runs.push_back(std::move(*slots[v][s]));
      if (!errors[v][s].empty()) result.cells[v].failures.push_back(errors[v][s]);
    }
  }
  return result;
}

}  // namespace riskbandit::harness
