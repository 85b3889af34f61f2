// Command-line front end: sweeps, calibration report, acceptance suite.

#include "retinal/error.hpp"
#include "retinal/experiments.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <iostream>
#include <optional>

using namespace retinal;

namespace {

ExperimentConfig base_config(const std::string& config_path, ExperimentKind kind) {
  if (!config_path.empty()) return load_config(config_path);
  switch (kind) {
    case ExperimentKind::fig2: return fig2_config();
    case ExperimentKind::fig3: return fig3_config();
    case ExperimentKind::custom: return ExperimentConfig{};
  }
  return {};
}

int simulate(const std::string& config_path, const std::string& experiment,
             const std::optional<std::string>& engine, const std::optional<std::string>& out,
             bool deterministic) {
  const ExperimentKind kind = parse_experiment(experiment);
  ExperimentConfig config = base_config(config_path, kind);
  if (engine) config.engine = parse_engine(*engine);
  if (out) config.output_dir = *out;
  if (deterministic) config.deterministic = true;

  const int workers = worker_count_from_env();
  SweepResult result;
  switch (kind) {
    case ExperimentKind::fig2: result = run_fig2_sweep(config, workers); break;
    case ExperimentKind::fig3: result = run_fig3_sweep(config, workers); break;
    case ExperimentKind::custom: result = run_sweep(config, kind, workers); break;
  }

  const std::string stem = fmt::format("{}_{}", to_string(kind), to_string(config.engine));
  const auto csv = config.output_dir / (stem + ".csv");
  emit_csv(result, csv, config.deterministic);
  {
    std::FILE* f = std::fopen((config.output_dir / (stem + ".cfg")).c_str(), "w");
    if (f == nullptr) fail(ErrorKind::io_error, "cannot write the config copy");
    std::fputs(serialize_config(config).c_str(), f);
    std::fclose(f);
  }

  int failed = 0;
  for (const auto& row : result.rows) {
    if (row.ok()) {
      fmt::print("gamma = {:<10.4g} yield = {:.5f}  cis = {:.5f}  residual = {:.2e}  {:.1f} s\n",
                 row.gamma, row.yield, row.absorbed_cis, row.residual_trace, row.wall_time_s);
    } else {
      ++failed;
      fmt::print(stderr, "gamma = {:<10.4g} FAILED: {}\n", row.gamma, row.error);
    }
  }
  fmt::print("wrote {}\n", csv.string());
  return failed == 0 ? 0 : 3;
}

int calibrate(const std::string& config_path) {
  const ExperimentConfig config = base_config(config_path, ExperimentKind::custom);
  const ModelParams p = resolve_params(config);
  const CrossingInfo c = locate_crossing(p);
  fmt::print("delta_x       = {:.12g}\n", p.delta_x);
  fmt::print("x_c           = {:.9g}\n", c.x_c);
  fmt::print("v_c           = {:.9g} per fs\n", c.v_c);
  fmt::print("slope_diff    = {:.9g} fs^-2\n", c.slope_diff);
  fmt::print("delta         = {:.9g}\n", c.delta);
  fmt::print("arrival_time  = {:.4f} fs\n", c.arrival_time);
  fmt::print("rabi_freq     = {:.6f} fs^-1\n", rabi_frequency(p));
  if (c.arrival_time < 85.0 || c.arrival_time > 135.0)
    fmt::print(stderr, "warning: arrival time outside [85, 135] fs\n");
  return 0;
}

int accept(int trajectories, std::uint64_t seed, const std::vector<double>& sweep,
           const std::vector<std::string>& only) {
  AcceptanceOptions o;
  o.trajectories = trajectories;
  o.seed = seed;
  o.workers = worker_count_from_env();
  if (!sweep.empty()) o.sweep_gammas = sweep;
  o.only = only;
  o.on_result = [](const CriterionResult& r) {
    fmt::print("{}\n", format_result(r));
    std::fflush(stdout);
  };
  const AcceptanceReport report = check_acceptance(o);
  fmt::print("{}\n", report.all_passed() ? "all criteria passed" : "some criteria FAILED");
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-surface isomerization under nonselective measurement"};
  app.require_subcommand(1);

  std::string config_path;
  std::string experiment = "fig3";
  std::optional<std::string> engine;
  std::optional<std::string> out;
  bool deterministic = false;
  auto* sim = app.add_subcommand("simulate", "Run a gamma sweep and write CSV");
  sim->add_option("--config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  sim->add_option("--experiment", experiment, "fig2 | fig3 | custom")
      ->check(CLI::IsMember({"fig2", "fig3", "custom"}));
  sim->add_option("--engine", engine, "dense | mcwf")->check(CLI::IsMember({"dense", "mcwf"}));
  sim->add_option("--out", out, "Output directory");
  sim->add_flag("--deterministic", deterministic, "Write wall_time_s as 0");

  std::string cal_config;
  auto* cal = app.add_subcommand("calibrate", "Calibrate delta_x and print the crossing");
  cal->add_option("--config", cal_config, "Config file")->check(CLI::ExistingFile);

  int trajectories = 2000;
  std::uint64_t seed = 20140101;
  std::vector<double> sweep;
  std::vector<std::string> only;
  auto* acc = app.add_subcommand("accept", "Run the acceptance criteria");
  acc->add_option("--trajectories", trajectories, "Trajectories for the unraveling check");
  acc->add_option("--seed", seed, "Ensemble seed");
  acc->add_option("--sweep", sweep, "Rates of the monotonicity sweep (default: 0 + 10 log points)");
  acc->add_option("--only", only, "Criterion ids to run, e.g. A4 A9 (default: all)");

  std::string print_kind = "fig3";
  auto* show = app.add_subcommand("print-config", "Print the default config of an experiment");
  show->add_option("--experiment", print_kind)->check(CLI::IsMember({"fig2", "fig3", "custom"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return simulate(config_path, experiment, engine, out, deterministic);
    if (*cal) return calibrate(cal_config);
    if (*acc) return accept(trajectories, seed, sweep, only);
    if (*show) {
      std::cout << serialize_config(base_config("", parse_experiment(print_kind)));
      return 0;
    }
  } catch (const SimulationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
