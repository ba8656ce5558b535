#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskbandit/harness/experiment.hpp"
#include "riskbandit/harness/stats.hpp"
#include "riskbandit/harness/sweep.hpp"

namespace riskbandit::harness {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Header `t,phase,reward,c1..cM,gamma,a1..ad`, one row per recorded step.
std::string run_csv(const RunLog& log);
void write_run_csv(const std::filesystem::path& path, const RunLog& log);

nlohmann::json run_summary_json(const RunLog& log);
nlohmann::json sweep_json(const SweepResult& result);
/// One row per axis value: value,runs,failures then <metric>_mean,<metric>_ci pairs.
std::string sweep_csv(const SweepResult& result);

/// Across-seed mean with 15th and 85th percentile band at each step.
struct CurveBand {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> low;
  std::vector<double> high;
};

enum class CurveField { Reward, Gamma };

/// Steps present in every log (the shortest run bounds the curve).
CurveBand curve_band(std::span<const RunLog> logs, CurveField field);

struct LineSeries {
  std::string name;
  CurveBand band;
};

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, std::span<const LineSeries> series);

struct BarItem {
  std::string label;
  MeanCi stat;
};

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          std::span<const BarItem> bars);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace riskbandit::harness
