#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "riskbandit/common/random.hpp"
#include "riskbandit/envs/environment.hpp"

namespace riskbandit::envs {

struct TransportBlock {
  std::int64_t tti = 0;
  double size_bits = 0.0;
  double snr_db = 0.0;
  int mcs = 0;
};

/// Reads `tti_index, size_bits, snr_db, mcs_index` lines. Blank lines, `#`
/// comments and a non-numeric header line are skipped. Throws ConfigError
/// naming the line on malformed input.
std::vector<TransportBlock> parse_tb_trace(std::istream& in);

/// Service-time and energy model of one processing unit.
///
/// service_ms = (fixed_ms + per_kbit_ms * kbits) * quality * jitter, where
/// quality = 1 + snr_penalty * (snr_max - snr) / (snr_max - snr_min) and
/// jitter = exp(jitter_sigma * xi). Decoding draws busy_power_w for the time
/// actually spent plus energy_per_tb_j per started TB; idle_power_w is drawn
/// for the whole period.
struct ProcessingUnitModel {
  double fixed_ms = 0.0;
  double per_kbit_ms = 0.0;
  double snr_penalty = 0.0;
  double jitter_sigma = 0.0;
  double busy_power_w = 0.0;
  double energy_per_tb_j = 0.0;
  double idle_power_w = 0.0;
};

struct RanConfig {
  int ttis_per_period = 100;
  double tti_ms = 1.0;
  int users = 6;
  double tx_probability = 0.3;
  /// Per-period traffic regime: log-size mean and SNR mean drawn uniformly.
  double size_log_mean_low = 9.0;   // ~8.1 kbit
  double size_log_mean_high = 10.3; // ~29.7 kbit
  double size_log_sigma = 0.8;
  double min_bits = 256.0;
  double max_bits = 100000.0;
  double snr_mean_low_db = 5.0;
  double snr_mean_high_db = 25.0;
  double snr_sigma_db = 3.0;
  double snr_min_db = -5.0;
  double snr_max_db = 30.0;
  int mcs_max = 27;
  double mcs_sigma = 1.5;
  double deadline_ms = 2.0;
  double epsilon = 0.05;
  /// Agent reward is -energy / energy_scale_j.
  double energy_scale_j = 10.0;
  int histogram_bins = 5;
  ProcessingUnitModel cpu{0.10, 0.02, 0.5, 0.3, 15.0, 0.0, 5.0};
  ProcessingUnitModel ha{0.05, 0.004, 0.5, 0.3, 250.0, 0.0, 30.0};
  /// When set, TBs are replayed from this trace (cyclically) instead of generated.
  std::optional<std::vector<TransportBlock>> trace;

  void validate() const;
};

enum class ProcessingUnit { Cpu, Ha };

/// Threshold routing: HA iff size_bits > threshold * max_bits.
ProcessingUnit route(const TransportBlock& tb, double threshold, double max_bits);

/// Outcome counts and energy of one decision period.
struct PeriodReport {
  int generated = 0;
  int decoded_in_time = 0;
  int dropped_in_queue = 0;
  int dropped_in_service = 0;
  int routed_to_ha = 0;
  double energy_j = 0.0;
  double reliability = 1.0;
};

/// Flattened D^3 histogram over (snr, mcs, size), index (i_snr * D + i_mcs) * D + i_size,
/// normalized to sum 1; all zeros for an empty period.
Eigen::VectorXd context_histogram(std::span<const TransportBlock> tbs, const RanConfig& config);

/// Two FIFO single-server units with a hard sojourn deadline.
///
/// A TB that cannot start before its deadline is dropped from the queue at no
/// energy cost; one that starts but cannot finish is cut off at the deadline and
/// charged for the time already spent.
class OffloadingSimulator {
 public:
  explicit OffloadingSimulator(RanConfig config);

  /// Runs every TB of one period (arrival order) through the queues.
  /// Service times come from `rng` via the unit models.
  PeriodReport run_period(std::span<const TransportBlock> tbs, double threshold, Rng& rng);

  double cpu_free_at_ms() const { return free_at_[0]; }
  double ha_free_at_ms() const { return free_at_[1]; }
  void set_free_at(double cpu_ms, double ha_ms);

  double service_ms(const TransportBlock& tb, ProcessingUnit unit, Rng& rng) const;

 private:
  RanConfig config_;
  double free_at_[2] = {0.0, 0.0};
};

/// Decision-period environment: action = normalized bit threshold in [0,1];
/// reward = -energy / scale; one lower-bound constraint on reliability (>= 1 - epsilon).
///
/// The context of period t is the histogram of the TBs that arrive during t;
/// the period's traffic is drawn before the action is chosen.
class RanOffloadingEnv final : public Environment {
 public:
  explicit RanOffloadingEnv(RanConfig config = {});

  std::string name() const override { return "ran"; }
  int context_dim() const override;
  ActionBox action_box() const override;
  std::vector<ConstraintBound> constraint_bounds() const override;
  void reset(std::uint64_t seed) override;
  const Eigen::VectorXd& context() const override { return context_; }
  Observation step(const Eigen::VectorXd& action) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

  const RanConfig& config() const { return config_; }
  const PeriodReport& last_report() const { return last_; }
  const std::vector<TransportBlock>& pending_tbs() const { return pending_; }
  std::int64_t period() const { return period_; }

 private:
  void prepare_period();
  std::vector<TransportBlock> generate_tbs();
  std::vector<TransportBlock> trace_tbs() const;

  RanConfig config_;
  OffloadingSimulator sim_;
  Rng rng_;
  std::int64_t period_ = 0;
  std::vector<TransportBlock> pending_;
  Eigen::VectorXd context_;
  PeriodReport last_;
  std::int64_t trace_periods_ = 0;
};

}  // namespace riskbandit::envs
