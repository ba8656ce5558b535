#include "riskbandit/cli/app.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "riskbandit/cli/config.hpp"
#include "riskbandit/common/errors.hpp"
#include "riskbandit/common/random.hpp"
#include "riskbandit/harness/checkpoint.hpp"
#include "riskbandit/harness/latency.hpp"
#include "riskbandit/harness/report.hpp"
#include "riskbandit/harness/stats.hpp"
#include "riskbandit/harness/sweep.hpp"

namespace riskbandit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string seeds;
  std::vector<std::string> overrides;
  std::string out_dir;
  int jobs = 1;
  bool force = false;
  std::string checkpoint;
  std::optional<double> alpha;
  std::string axis;
  std::vector<double> values;
  std::size_t trials = 10000;
};

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("--seeds: '" + text + "' is not a seed");
  return value;
}

/// "0-4,9" -> {0, 1, 2, 3, 4, 9}
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(parse_seed(item));
    } else {
      const auto lo = parse_seed(item.substr(0, dash));
      const auto hi = parse_seed(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("--seeds: empty range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

RunConfig load_config(const Options& opt) {
  json raw = opt.config_path.empty() ? json::object() : read_config_file(opt.config_path);
  for (const auto& o : opt.overrides) apply_override(raw, o);
  RunConfig config = parse_config(raw);
  if (!opt.seeds.empty()) config.spec.seeds = parse_seed_list(opt.seeds);
  if (opt.seed) config.spec.seeds = {*opt.seed};
  if (!opt.out_dir.empty()) config.output_dir = opt.out_dir;
  if (opt.jobs < 1) throw ConfigError("--jobs must be at least 1");
  config.spec.validate();
  return config;
}

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError("output path '" + dir.string() + "' is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw ConfigError("output directory '" + dir.string() +
                        "' is not empty; pass --force to overwrite");
    }
  }
  fs::create_directories(dir);
}

json metadata(const RunConfig& config) {
  return {{"config", to_json(config)}, {"rng", describe_stream_rule()}};
}

json aggregate_json(const std::vector<harness::RunLog>& logs) {
  std::vector<std::pair<std::string, std::vector<double>>> columns;
  for (const auto& log : logs) {
    for (const auto& [name, value] : log.summary.metrics()) {
      auto it = std::find_if(columns.begin(), columns.end(), [&](const auto& c) { return c.first == name; });
      if (it == columns.end()) {
        columns.emplace_back(name, std::vector<double>{});
        it = std::prev(columns.end());
      }
      it->second.push_back(value);
    }
  }
  json out = json::object();
  for (const auto& [name, values] : columns) {
    const auto stat = harness::mean_ci(values);
    out[name] = {{"mean", stat.mean}, {"ci", stat.half_width}, {"n", stat.n}};
  }
  return out;
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

void print_summary(std::ostream& out, const std::string& label, const harness::RunSummary& s) {
  out << label;
  for (const auto& [name, value] : s.metrics()) out << ' ' << name << '=' << harness::format_double(value);
  out << '\n';
}

int cmd_train(const Options& opt, std::ostream& out) {
  const RunConfig config = load_config(opt);
  const fs::path dir = config.output_dir;
  prepare_output(dir, opt.force);
  harness::write_text(dir / "config.json", to_json(config).dump(2) + "\n");

  const auto& spec = config.spec;
  std::vector<harness::RunLog> logs(spec.seeds.size());
  harness::parallel_for(spec.seeds.size(), opt.jobs, [&](std::size_t i) {
    const auto seed = spec.seeds[i];
    const fs::path run_dir = dir / seed_dir(seed);
    fs::create_directories(run_dir);
    harness::Session session(spec, seed);
    session.train(spec.train_steps);
    harness::write_checkpoint(run_dir / "checkpoint.json", session.checkpoint());
    session.infer(spec.infer_steps);
    logs[i] = session.finish();
    harness::write_run_csv(run_dir / "run.csv", logs[i]);
    harness::write_text(run_dir / "summary.json", harness::run_summary_json(logs[i]).dump(2) + "\n");
  });

  json summary = metadata(config);
  summary["runs"] = json::array();
  for (const auto& log : logs) summary["runs"].push_back(harness::run_summary_json(log));
  summary["aggregate"] = aggregate_json(logs);
  harness::write_text(dir / "summary.json", summary.dump(2) + "\n");

  const std::string name = agents::to_string(spec.agent.kind);
  const std::vector<harness::LineSeries> gamma{{name, harness::curve_band(logs, harness::CurveField::Gamma)}};
  harness::write_text(dir / "gamma.svg", harness::line_chart_svg("Cumulative constraint violation", "t",
                                                                 "Gamma", gamma));
  const std::vector<harness::LineSeries> reward{{name, harness::curve_band(logs, harness::CurveField::Reward)}};
  harness::write_text(dir / "reward.svg", harness::line_chart_svg("Reward", "t", "reward", reward));

  for (const auto& log : logs) print_summary(out, "seed " + std::to_string(log.seed) + ":", log.summary);
  out << "wrote " << dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& out) {
  if (opt.checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  const RunConfig config = load_config(opt);
  const auto& spec = config.spec;
  const auto seed = spec.seeds.front();
  harness::Session session(spec, seed);
  const json state = harness::read_checkpoint(opt.checkpoint);
  session.restore(state);
  std::optional<Eigen::VectorXd> alphas;
  if (opt.alpha) {
    alphas = Eigen::VectorXd::Constant(session.agent().risk().num_constraints(), *opt.alpha);
    session.agent().risk().check_alphas(*alphas);
  }

  const fs::path dir = config.output_dir;
  prepare_output(dir, opt.force);
  session.infer(spec.infer_steps, alphas);
  const harness::RunLog log = session.finish();

  json result = metadata(config);
  result["checkpoint"] = opt.checkpoint;
  result["run"] = harness::run_summary_json(log);
  harness::write_text(dir / "eval.json", result.dump(2) + "\n");
  harness::write_run_csv(dir / "eval.csv", log);
  harness::write_text(dir / "config.json", to_json(config).dump(2) + "\n");

  out << "alpha";
  for (double a : log.infer_alphas) out << ' ' << harness::format_double(a);
  out << '\n';
  print_summary(out, "eval:", log.summary);
  return kExitOk;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  RunConfig config = load_config(opt);
  if (!opt.axis.empty()) config.sweep_axis = harness::parse_sweep_axis(opt.axis);
  if (!opt.values.empty()) config.sweep_values = opt.values;
  if (!config.sweep_axis) throw ConfigError("sweep needs --axis or sweep.axis");
  if (config.sweep_values.empty()) throw ConfigError("sweep needs --values or sweep.values");
  const auto axis = *config.sweep_axis;
  harness::validate_sweep(config.spec, axis, config.sweep_values);

  const fs::path dir = config.output_dir;
  prepare_output(dir, opt.force);
  harness::write_text(dir / "config.json", to_json(config).dump(2) + "\n");

  const auto result = harness::sweep(config.spec, axis, config.sweep_values, opt.jobs);
  const std::string axis_name = harness::to_string(axis);
  json sweep_out = harness::sweep_json(result);
  sweep_out.update(metadata(config));
  harness::write_text(dir / "sweep.json", sweep_out.dump(2) + "\n");
  harness::write_text(dir / "sweep.csv", harness::sweep_csv(result));

  std::vector<harness::LineSeries> gamma_series;
  for (const auto& cell : result.cells) {
    const fs::path cell_dir = dir / (axis_name + "_" + harness::format_double(cell.value));
    fs::create_directories(cell_dir);
    json cell_json = {{"value", cell.value}, {"failures", cell.failures}, {"runs", json::array()}};
    for (const auto& log : cell.runs) {
      harness::write_run_csv(cell_dir / (seed_dir(log.seed) + ".csv"), log);
      cell_json["runs"].push_back(harness::run_summary_json(log));
    }
    harness::write_text(cell_dir / "summary.json", cell_json.dump(2) + "\n");
    if (!cell.runs.empty()) {
      gamma_series.push_back({axis_name + "=" + harness::format_double(cell.value),
                              harness::curve_band(cell.runs, harness::CurveField::Gamma)});
    }
  }
  harness::write_text(dir / "gamma.svg", harness::line_chart_svg("Cumulative constraint violation", "t",
                                                                 "Gamma", gamma_series));

  const auto rows = result.table();
  std::vector<std::string> chart_metrics{"infer_mean_violation", "infer_mean_reward"};
  if (config.spec.env.kind == harness::EnvKind::Ran) {
    chart_metrics.insert(chart_metrics.end(), {"infer_unreliability", "infer_mean_energy_j"});
  }
  for (const auto& metric : chart_metrics) {
    std::vector<harness::BarItem> bars;
    for (const auto& row : rows) {
      if (row.runs == 0) continue;
      bars.push_back({axis_name + "=" + harness::format_double(row.value), row.metric(metric)});
    }
    harness::write_text(dir / (metric + ".svg"), harness::bar_chart_svg(metric, metric, bars));
  }

  out << harness::sweep_csv(result);
  std::size_t failures = 0;
  for (const auto& cell : result.cells) failures += cell.failures.size();
  for (const auto& cell : result.cells) {
    for (const auto& f : cell.failures) out << axis_name << '=' << harness::format_double(cell.value) << " " << f << '\n';
  }
  return failures == 0 ? kExitOk : kExitRuntime;
}

int cmd_bench(const Options& opt, std::ostream& out) {
  const RunConfig config = load_config(opt);
  if (opt.trials == 0) throw ConfigError("--trials must be positive");
  const auto seed = config.spec.seeds.front();
  harness::Session session(config.spec, seed);
  if (!opt.checkpoint.empty()) session.load_agent(harness::read_checkpoint(opt.checkpoint));

  const fs::path dir = config.output_dir;
  prepare_output(dir, opt.force);
  const auto stats = harness::latency_bench(session.agent(), session.env().context(), opt.trials);
  json result = metadata(config);
  result["latency"] = {{"mean_ms", stats.mean_ms}, {"stddev_ms", stats.stddev_ms}, {"trials", stats.trials}};
  harness::write_text(dir / "bench.json", result.dump(2) + "\n");
  out << "action selection: " << harness::format_double(stats.mean_ms) << " ms mean, "
      << harness::format_double(stats.stddev_ms) << " ms std over " << stats.trials << " trials\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-aware constrained contextual bandits: training, evaluation and sweeps"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Single seed (replaces experiment.seeds)");
  app.add_option("--seeds", opt.seeds, "Seed list such as 0-9 or 1,4,7");
  app.add_option("--override", opt.overrides, "section.key=value, applied after the config file")
      ->allow_extra_args(false);
  app.add_option("--out", opt.out_dir, "Output directory (replaces output.dir)");
  app.add_option("--jobs", opt.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  app.add_flag("--force", opt.force, "Write into a non-empty output directory");
  app.add_option("--checkpoint", opt.checkpoint, "Checkpoint written by train (eval, bench)");
  app.add_option("--alpha", opt.alpha, "Risk level for inference (eval)");
  app.add_option("--axis", opt.axis, "Sweep axis: sigma_env, alpha, lambda, epsilon, dim");
  app.add_option("--values", opt.values, "Comma-separated sweep values")->delimiter(',');
  app.add_option("--trials", opt.trials, "Timed action selections (bench)");

  auto* train = app.add_subcommand("train", "Train and evaluate every seed; write logs, summaries, checkpoints");
  auto* eval = app.add_subcommand("eval", "Inference from a checkpoint at a chosen risk level");
  auto* sweep = app.add_subcommand("sweep", "Run every seed at each value of one axis");
  auto* bench = app.add_subcommand("bench", "Time deterministic action selection");
  for (auto* sub : {train, eval, sweep, bench}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(opt, out);
    if (eval->parsed()) return cmd_eval(opt, out);
    if (sweep->parsed()) return cmd_sweep(opt, out);
    return cmd_bench(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace riskbandit::cli
