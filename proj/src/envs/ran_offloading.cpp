#include "riskbandit/envs/ran_offloading.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>

#include "riskbandit/common/errors.hpp"
#include "riskbandit/common/json_eigen.hpp"

namespace riskbandit::envs {

std::vector<TransportBlock> parse_tb_trace(std::istream& in) {
  std::vector<TransportBlock> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    TransportBlock tb;
    if (!(fields >> tb.tti >> tb.size_bits >> tb.snr_db >> tb.mcs)) {
      if (out.empty() && line_no == 1 && !std::isdigit(static_cast<unsigned char>(line[first]))) {
        continue;  // header
      }
      throw ConfigError("trace line " + std::to_string(line_no) +
                        ": expected 'tti_index, size_bits, snr_db, mcs_index'");
    }
    std::string extra;
    if (fields >> extra) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": unexpected trailing field");
    }
    if (tb.tti < 0 || tb.size_bits < 0.0 || tb.mcs < 0) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": negative field");
    }
    if (!out.empty() && tb.tti < out.back().tti) {
      throw ConfigError("trace line " + std::to_string(line_no) + ": tti_index decreases");
    }
    out.push_back(tb);
  }
  return out;
}

void RanConfig::validate() const {
  if (ttis_per_period <= 0) throw ConfigError("env.ttis_per_period must be positive");
  if (!(tti_ms > 0.0)) throw ConfigError("env.tti_ms must be positive");
  if (users < 0) throw ConfigError("env.users must be non-negative");
  if (tx_probability < 0.0 || tx_probability > 1.0) {
    throw ConfigError("env.tx_probability must lie in [0, 1]");
  }
  if (!(min_bits > 0.0 && min_bits < max_bits)) throw ConfigError("env TB size range is empty");
  if (size_log_mean_low > size_log_mean_high) throw ConfigError("env size regime range inverted");
  if (snr_mean_low_db > snr_mean_high_db || !(snr_min_db < snr_max_db)) {
    throw ConfigError("env SNR range inverted");
  }
  if (mcs_max <= 0) throw ConfigError("env.mcs_max must be positive");
  if (!(deadline_ms > 0.0)) throw ConfigError("env.deadline_ms must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("env.epsilon must lie in (0, 1)");
  if (!(energy_scale_j > 0.0)) throw ConfigError("env.energy_scale_j must be positive");
  if (histogram_bins <= 0) throw ConfigError("env.histogram_bins must be positive");
  for (const auto* unit : {&cpu, &ha}) {
    if (unit->fixed_ms < 0.0 || unit->per_kbit_ms < 0.0 || unit->snr_penalty < 0.0 ||
        unit->jitter_sigma < 0.0 || unit->busy_power_w < 0.0 || unit->energy_per_tb_j < 0.0 ||
        unit->idle_power_w < 0.0) {
      throw ConfigError("processing unit model parameters must be non-negative");
    }
  }
  if (trace && trace->empty()) throw ConfigError("env trace is empty");
}

ProcessingUnit route(const TransportBlock& tb, double threshold, double max_bits) {
  return tb.size_bits > threshold * max_bits ? ProcessingUnit::Ha : ProcessingUnit::Cpu;
}

namespace {

int bin_of(double value, double lo, double hi, int bins) {
  const double x = (value - lo) / (hi - lo) * bins;
  return std::clamp(static_cast<int>(std::floor(x)), 0, bins - 1);
}

}  // namespace

Eigen::VectorXd context_histogram(std::span<const TransportBlock> tbs, const RanConfig& config) {
  const int d = config.histogram_bins;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * d * d);
  if (tbs.empty()) return hist;
  for (const auto& tb : tbs) {
    const int ic = bin_of(tb.snr_db, config.snr_min_db, config.snr_max_db, d);
    const int im = bin_of(static_cast<double>(tb.mcs), 0.0, static_cast<double>(config.mcs_max) + 1.0, d);
    const int il = bin_of(tb.size_bits, 0.0, config.max_bits, d);
    hist((static_cast<Eigen::Index>(ic) * d + im) * d + il) += 1.0;
  }
  return hist / static_cast<double>(tbs.size());
}

OffloadingSimulator::OffloadingSimulator(RanConfig config) : config_(std::move(config)) {}

void OffloadingSimulator::set_free_at(double cpu_ms, double ha_ms) {
  free_at_[0] = cpu_ms;
  free_at_[1] = ha_ms;
}

double OffloadingSimulator::service_ms(const TransportBlock& tb, ProcessingUnit unit,
                                       Rng& rng) const {
  const auto& model = unit == ProcessingUnit::Cpu ? config_.cpu : config_.ha;
  const double snr = std::clamp(tb.snr_db, config_.snr_min_db, config_.snr_max_db);
  const double quality =
      1.0 + model.snr_penalty * (config_.snr_max_db - snr) / (config_.snr_max_db - config_.snr_min_db);
  const double jitter = std::exp(model.jitter_sigma * standard_normal(rng));
  return (model.fixed_ms + model.per_kbit_ms * tb.size_bits / 1000.0) * quality * jitter;
}

PeriodReport OffloadingSimulator::run_period(std::span<const TransportBlock> tbs, double threshold,
                                             Rng& rng) {
  PeriodReport report;
  const double period_ms = config_.ttis_per_period * config_.tti_ms;
  report.energy_j = (config_.cpu.idle_power_w + config_.ha.idle_power_w) * period_ms / 1000.0;
  for (const auto& tb : tbs) {
    ++report.generated;
    const ProcessingUnit unit = route(tb, threshold, config_.max_bits);
    const auto& model = unit == ProcessingUnit::Cpu ? config_.cpu : config_.ha;
    double& free_at = free_at_[unit == ProcessingUnit::Cpu ? 0 : 1];
    if (unit == ProcessingUnit::Ha) ++report.routed_to_ha;
    // Drawn for every TB so the stream does not depend on queue state.
    const double service = service_ms(tb, unit, rng);

    const double arrival = static_cast<double>(tb.tti) * config_.tti_ms;
    const double deadline = arrival + config_.deadline_ms;
    const double start = std::max(arrival, free_at);
    if (start >= deadline) {
      ++report.dropped_in_queue;
      continue;
    }
    const double finish = start + service;
    const double busy = std::min(finish, deadline) - start;
    report.energy_j += model.energy_per_tb_j + model.busy_power_w * busy / 1000.0;
    if (finish <= deadline) {
      ++report.decoded_in_time;
      free_at = finish;
    } else {
      ++report.dropped_in_service;
      free_at = deadline;
    }
  }
  report.reliability = report.generated == 0
                           ? 1.0
                           : static_cast<double>(report.decoded_in_time) / report.generated;
  return report;
}

RanOffloadingEnv::RanOffloadingEnv(RanConfig config) : config_(std::move(config)), sim_(config_) {
  config_.validate();
  if (config_.trace) {
    trace_periods_ = config_.trace->back().tti / config_.ttis_per_period + 1;
  }
  context_ = Eigen::VectorXd::Zero(context_dim());
}

int RanOffloadingEnv::context_dim() const {
  return config_.histogram_bins * config_.histogram_bins * config_.histogram_bins;
}

ActionBox RanOffloadingEnv::action_box() const {
  return {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
}

std::vector<ConstraintBound> RanOffloadingEnv::constraint_bounds() const {
  return {{1.0 - config_.epsilon, BoundKind::Lower}};
}

void RanOffloadingEnv::reset(std::uint64_t seed) {
  rng_ = make_stream(seed, Stream::Env);
  period_ = 0;
  sim_.set_free_at(0.0, 0.0);
  last_ = {};
  prepare_period();
}

std::vector<TransportBlock> RanOffloadingEnv::generate_tbs() {
  const double log_mean = uniform(rng_, config_.size_log_mean_low, config_.size_log_mean_high);
  const double snr_mean = uniform(rng_, config_.snr_mean_low_db, config_.snr_mean_high_db);
  std::vector<TransportBlock> tbs;
  const std::int64_t first_tti = period_ * config_.ttis_per_period;
  for (int k = 0; k < config_.ttis_per_period; ++k) {
    for (int u = 0; u < config_.users; ++u) {
      if (uniform(rng_) >= config_.tx_probability) continue;
      TransportBlock tb;
      tb.tti = first_tti + k;
      // Truncated lognormal via rejection, falling back to clamping.
      double size = 0.0;
      for (int attempt = 0; attempt < 16; ++attempt) {
        size = std::exp(log_mean + config_.size_log_sigma * standard_normal(rng_));
        if (size >= config_.min_bits && size <= config_.max_bits) break;
      }
      tb.size_bits = std::round(std::clamp(size, config_.min_bits, config_.max_bits));
      tb.snr_db = std::clamp(snr_mean + config_.snr_sigma_db * standard_normal(rng_),
                             config_.snr_min_db, config_.snr_max_db);
      const double quality = (tb.snr_db - config_.snr_min_db) / (config_.snr_max_db - config_.snr_min_db);
      const double mcs = quality * config_.mcs_max + config_.mcs_sigma * standard_normal(rng_);
      tb.mcs = std::clamp(static_cast<int>(std::lround(mcs)), 0, config_.mcs_max);
      tbs.push_back(tb);
    }
  }
  return tbs;
}

std::vector<TransportBlock> RanOffloadingEnv::trace_tbs() const {
  const std::int64_t cycle = period_ / trace_periods_;
  const std::int64_t local = period_ % trace_periods_;
  const std::int64_t lo = local * config_.ttis_per_period;
  const std::int64_t hi = lo + config_.ttis_per_period;
  const std::int64_t shift = cycle * trace_periods_ * config_.ttis_per_period;
  std::vector<TransportBlock> tbs;
  for (const auto& tb : *config_.trace) {
    if (tb.tti >= lo && tb.tti < hi) {
      TransportBlock copy = tb;
      copy.tti += shift;
      tbs.push_back(copy);
    }
  }
  return tbs;
}

void RanOffloadingEnv::prepare_period() {
  pending_ = config_.trace ? trace_tbs() : generate_tbs();
  context_ = context_histogram(pending_, config_);
}

Observation RanOffloadingEnv::step(const Eigen::VectorXd& action) {
  if (action.size() != 1) throw ShapeError("RAN env takes a scalar threshold");
  const double threshold = std::clamp(action(0), 0.0, 1.0);
  last_ = sim_.run_period(pending_, threshold, rng_);
  ++period_;
  prepare_period();
  Observation obs;
  obs.reward = -last_.energy_j / config_.energy_scale_j;
  obs.constraints = Eigen::VectorXd::Constant(1, last_.reliability);
  return obs;
}

nlohmann::json RanOffloadingEnv::save_state() const {
  nlohmann::json tbs = nlohmann::json::array();
  for (const auto& tb : pending_) tbs.push_back({tb.tti, tb.size_bits, tb.snr_db, tb.mcs});
  return {{"rng", save_rng(rng_)},
          {"period", period_},
          {"cpu_free_at", sim_.cpu_free_at_ms()},
          {"ha_free_at", sim_.ha_free_at_ms()},
          {"pending", std::move(tbs)}};
}

void RanOffloadingEnv::load_state(const nlohmann::json& state) {
  load_rng(rng_, state.at("rng").get<std::string>());
  period_ = state.at("period").get<std::int64_t>();
  sim_.set_free_at(state.at("cpu_free_at").get<double>(), state.at("ha_free_at").get<double>());
  pending_.clear();
  for (const auto& tb : state.at("pending")) {
    pending_.push_back({tb.at(0).get<std::int64_t>(), tb.at(1).get<double>(),
                        tb.at(2).get<double>(), tb.at(3).get<int>()});
  }
  context_ = context_histogram(pending_, config_);
}

}  // namespace riskbandit::envs
