#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "riskbandit/harness/experiment.hpp"
#include "riskbandit/harness/sweep.hpp"

namespace riskbandit::cli {

/// Resolved contents of a config file. Sections: env, agent, risk,
/// experiment, sweep, output. Omitted fields keep their defaults; unknown
/// keys are rejected.
struct RunConfig {
  harness::ExperimentSpec spec;
  std::optional<harness::SweepAxis> sweep_axis;
  std::vector<double> sweep_values;
  std::string output_dir = "runs";
  /// Trace file for the RAN env, as written in the config.
  std::optional<std::string> trace_path;
};

/// Parses JSON text; syntax errors become ConfigError with line and column.
nlohmann::json parse_config_text(const std::string& text, const std::string& source);
nlohmann::json read_config_file(const std::string& path);

/// `section.key=value`; value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Validates and resolves. Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& config);

/// Every field with its effective value.
nlohmann::json to_json(const RunConfig& config);

}  // namespace riskbandit::cli
