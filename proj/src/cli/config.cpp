#include "riskbandit/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "riskbandit/common/errors.hpp"

namespace riskbandit::cli {

using nlohmann::json;

namespace {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "config" : path_) + " must be an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(field(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(field(key) + " must be a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  template <class T>
  void read(const std::string& key, std::vector<T>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) throw ConfigError(field(key) + " must be an array");
      std::vector<T> values;
      for (const auto& e : *v) {
        const bool ok = std::is_integral_v<T> ? (std::is_unsigned_v<T> ? e.is_number_unsigned()
                                                                      : e.is_number_integer())
                                              : e.is_number();
        if (!ok) throw ConfigError(field(key) + " has an element of the wrong type");
        values.push_back(e.get<T>());
      }
      out = std::move(values);
    }
  }

  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (has(key)) {
      T value{};
      read(key, value);
      out = std::move(value);
    } else {
      seen_.insert(key);
    }
  }

  Section child(const std::string& key) {
    const json* v = get(key);
    static const json empty = json::object();
    return Section(v ? *v : empty, field(key));
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown key '" + field(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_unit(Section s, envs::ProcessingUnitModel& u) {
  s.read("fixed_ms", u.fixed_ms);
  s.read("per_kbit_ms", u.per_kbit_ms);
  s.read("snr_penalty", u.snr_penalty);
  s.read("jitter_sigma", u.jitter_sigma);
  s.read("busy_power_w", u.busy_power_w);
  s.read("energy_per_tb_j", u.energy_per_tb_j);
  s.read("idle_power_w", u.idle_power_w);
  s.finish();
}

json unit_json(const envs::ProcessingUnitModel& u) {
  return {{"fixed_ms", u.fixed_ms},         {"per_kbit_ms", u.per_kbit_ms},
          {"snr_penalty", u.snr_penalty},   {"jitter_sigma", u.jitter_sigma},
          {"busy_power_w", u.busy_power_w}, {"energy_per_tb_j", u.energy_per_tb_j},
          {"idle_power_w", u.idle_power_w}};
}

void read_env(Section s, RunConfig& out) {
  auto& env = out.spec.env;
  const json* kind = s.get("kind");
  if (kind == nullptr) throw ConfigError("missing required field env.kind");
  if (!kind->is_string()) throw ConfigError("env.kind must be a string");
  env.kind = harness::parse_env_kind(kind->get<std::string>());
  switch (env.kind) {
    case harness::EnvKind::Synthetic: {
      auto& c = env.synthetic;
      s.read("sigma_env", c.sigma_env);
      s.read("c_max", c.c_max);
      s.read("action_low", c.action_low);
      s.read("action_high", c.action_high);
      break;
    }
    case harness::EnvKind::Polynomial: {
      auto& c = env.polynomial;
      s.read("dim", c.dim);
      s.read("sigma_env", c.sigma_env);
      s.read("c_max", c.c_max);
      s.read("action_low", c.action_low);
      s.read("action_high", c.action_high);
      break;
    }
    case harness::EnvKind::Ran: {
      auto& c = env.ran;
      s.read("ttis_per_period", c.ttis_per_period);
      s.read("tti_ms", c.tti_ms);
      s.read("users", c.users);
      s.read("tx_probability", c.tx_probability);
      s.read("size_log_mean_low", c.size_log_mean_low);
      s.read("size_log_mean_high", c.size_log_mean_high);
      s.read("size_log_sigma", c.size_log_sigma);
      s.read("min_bits", c.min_bits);
      s.read("max_bits", c.max_bits);
      s.read("snr_mean_low_db", c.snr_mean_low_db);
      s.read("snr_mean_high_db", c.snr_mean_high_db);
      s.read("snr_sigma_db", c.snr_sigma_db);
      s.read("snr_min_db", c.snr_min_db);
      s.read("snr_max_db", c.snr_max_db);
      s.read("mcs_max", c.mcs_max);
      s.read("mcs_sigma", c.mcs_sigma);
      s.read("deadline_ms", c.deadline_ms);
      s.read("epsilon", c.epsilon);
      s.read("energy_scale_j", c.energy_scale_j);
      s.read("histogram_bins", c.histogram_bins);
      if (s.has("cpu")) read_unit(s.child("cpu"), c.cpu);
      if (s.has("ha")) read_unit(s.child("ha"), c.ha);
      s.read("trace", out.trace_path);
      if (out.trace_path) {
        std::ifstream in(*out.trace_path);
        if (!in) throw ConfigError("env.trace: cannot open '" + *out.trace_path + "'");
        c.trace = envs::parse_tb_trace(in);
      }
      break;
    }
  }
  s.finish();
}

void read_agent(Section s, agents::AgentConfig& a) {
  std::string kind = agents::to_string(a.kind);
  s.read("kind", kind);
  a.kind = agents::parse_agent_kind(kind);
  s.read("lambda", a.lambda);
  s.read("batch_size", a.batch_size);
  s.read("kappa", a.kappa);
  s.read("actor_lr", a.actor_lr);
  s.read("critic_lr", a.critic_lr);
  s.read("buffer_capacity", a.buffer_capacity);
  s.read("hidden", a.hidden);
  s.read("reward_quantiles", a.reward_quantiles);
  s.read("ou_theta", a.ou_theta);
  s.read("ou_sigma", a.ou_sigma);
  s.finish();
}

void read_risk(Section s, harness::RiskConfig& r) {
  s.read("alpha", r.alpha);
  s.read("train_alphas", r.train_alphas);
  s.read("upper_levels", r.upper_levels);
  s.read("lower_levels", r.lower_levels);
  s.finish();
}

}  // namespace

json parse_config_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  if (!config.is_object()) config = json::object();
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    json& next = (*node)[key];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError("override '" + assignment + "': '" + key + "' is not a section");
    node = &next;
    start = dot + 1;
  }
}

RunConfig parse_config(const json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig out;
  Section root(config, "");
  if (!root.has("env")) throw ConfigError("missing required field env.kind");
  read_env(root.child("env"), out);
  read_agent(root.child("agent"), out.spec.agent);
  read_risk(root.child("risk"), out.spec.risk);

  out.spec.train_steps = out.spec.env.kind == harness::EnvKind::Ran ? 1500 : 5000;
  Section exp = root.child("experiment");
  exp.read("train_steps", out.spec.train_steps);
  exp.read("infer_steps", out.spec.infer_steps);
  exp.read("seeds", out.spec.seeds);
  exp.finish();

  Section sw = root.child("sweep");
  std::optional<std::string> axis;
  sw.read("axis", axis);
  if (axis) out.sweep_axis = harness::parse_sweep_axis(*axis);
  sw.read("values", out.sweep_values);
  sw.finish();

  Section output = root.child("output");
  output.read("dir", out.output_dir);
  output.finish();
  root.finish();

  out.spec.validate();
  return out;
}

json to_json(const RunConfig& config) {
  const auto& spec = config.spec;
  json env = {{"kind", harness::to_string(spec.env.kind)}};
  switch (spec.env.kind) {
    case harness::EnvKind::Synthetic: {
      const auto& c = spec.env.synthetic;
      env.update({{"sigma_env", c.sigma_env}, {"c_max", c.c_max}, {"action_low", c.action_low},
                  {"action_high", c.action_high}});
      break;
    }
    case harness::EnvKind::Polynomial: {
      const auto& c = spec.env.polynomial;
      env.update({{"dim", c.dim}, {"sigma_env", c.sigma_env}, {"c_max", c.c_max},
                  {"action_low", c.action_low}, {"action_high", c.action_high}});
      break;
    }
    case harness::EnvKind::Ran: {
      const auto& c = spec.env.ran;
      env.update({{"ttis_per_period", c.ttis_per_period}, {"tti_ms", c.tti_ms}, {"users", c.users},
                  {"tx_probability", c.tx_probability}, {"size_log_mean_low", c.size_log_mean_low},
                  {"size_log_mean_high", c.size_log_mean_high}, {"size_log_sigma", c.size_log_sigma},
                  {"min_bits", c.min_bits}, {"max_bits", c.max_bits},
                  {"snr_mean_low_db", c.snr_mean_low_db}, {"snr_mean_high_db", c.snr_mean_high_db},
                  {"snr_sigma_db", c.snr_sigma_db}, {"snr_min_db", c.snr_min_db},
                  {"snr_max_db", c.snr_max_db}, {"mcs_max", c.mcs_max}, {"mcs_sigma", c.mcs_sigma},
                  {"deadline_ms", c.deadline_ms}, {"epsilon", c.epsilon},
                  {"energy_scale_j", c.energy_scale_j}, {"histogram_bins", c.histogram_bins},
                  {"cpu", unit_json(c.cpu)}, {"ha", unit_json(c.ha)}});
      if (config.trace_path) env["trace"] = *config.trace_path;
      break;
    }
  }
  const auto& a = spec.agent;
  json agent = {{"kind", agents::to_string(a.kind)},
                {"lambda", a.lambda},
                {"batch_size", a.batch_size},
                {"kappa", a.kappa},
                {"actor_lr", a.actor_lr},
                {"critic_lr", a.critic_lr},
                {"buffer_capacity", a.buffer_capacity},
                {"hidden", a.hidden},
                {"reward_quantiles", a.reward_quantiles},
                {"ou_theta", a.ou_theta},
                {"ou_sigma", a.ou_sigma}};
  json risk = json::object();
  if (spec.risk.alpha) risk["alpha"] = *spec.risk.alpha;
  if (spec.risk.train_alphas) risk["train_alphas"] = *spec.risk.train_alphas;
  if (spec.risk.upper_levels) risk["upper_levels"] = *spec.risk.upper_levels;
  if (spec.risk.lower_levels) risk["lower_levels"] = *spec.risk.lower_levels;
  json sweep = json::object();
  if (config.sweep_axis) sweep["axis"] = harness::to_string(*config.sweep_axis);
  if (!config.sweep_values.empty()) sweep["values"] = config.sweep_values;
  return {{"env", env},
          {"agent", agent},
          {"risk", risk},
          {"experiment",
           {{"train_steps", spec.train_steps}, {"infer_steps", spec.infer_steps}, {"seeds", spec.seeds}}},
          {"sweep", sweep},
          {"output", {{"dir", config.output_dir}}}};
}

}  // namespace riskbandit::cli
