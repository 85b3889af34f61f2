#pragma once

// Sweep orchestration, configuration files, CSV output and the acceptance
// suite shared by the command-line tool and the test binary.

#include "retinal/lindblad.hpp"
#include "retinal/model.hpp"
#include "retinal/schedule.hpp"
#include "retinal/sinks.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace retinal {

enum class SchedulePreset { continuous_200fs, pulsed_single_transit, pulsed_full, custom };
enum class EngineKind { dense, mcwf };
enum class ExperimentKind { fig2, fig3, custom };

std::string_view to_string(SchedulePreset preset);
std::string_view to_string(EngineKind engine);
std::string_view to_string(ExperimentKind kind);
SchedulePreset parse_preset(std::string_view text);
EngineKind parse_engine(std::string_view text);
ExperimentKind parse_experiment(std::string_view text);

/// Window intervals (t_on, t_off) of a preset, in fs. Empty for custom.
std::vector<std::pair<double, double>> preset_intervals(SchedulePreset preset);

/// Default sweep: gamma = 0 followed by `count` log-spaced rates in
/// [lo, hi], all in fs^-1.
std::vector<double> default_gamma_grid(double lo = 1e-2, double hi = 1e2, int count = 40);

struct ExperimentConfig {
  // model.*; model.delta_x is ignored, the optional below decides.
  // Left empty, delta_x is calibrated against delta = 11.5 alpha^2.
  ModelParams model;
  std::optional<double> delta_x;
  // grid.*
  int n_points = kDefaultPoints;
  double padding = kDefaultPadding;
  // integrator.*
  double dt = 0.1;
  double t_final = 1100.0;
  // schedule.*
  SchedulePreset preset = SchedulePreset::pulsed_full;
  std::vector<std::pair<double, double>> windows;  // custom preset only
  EdgeShape edge = EdgeShape::rectangular;
  double ramp_fs = 0.0;
  // sweep.*
  std::vector<double> gammas = default_gamma_grid();
  // engine.*
  EngineKind engine = EngineKind::dense;
  int trajectories = 2000;
  std::uint64_t seed = 1;
  double mcwf_dt = 0.04;
  // sinks.*
  SinkShape sinks;
  // output.*
  std::filesystem::path output_dir = "out";
  bool deterministic = false;  // write wall_time_s as 0

  bool operator==(const ExperimentConfig& other) const;
};

/// Flat `key = value` text, `#` starts a comment. Unknown keys, malformed
/// values and duplicate keys raise config_error.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key, full precision; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Preset defaults for the figure experiments (schedule, horizon).
ExperimentConfig fig2_config(SchedulePreset preset = SchedulePreset::continuous_200fs);
ExperimentConfig fig3_config();

/// Model parameters with delta_x resolved (calibrated when unset).
ModelParams resolve_params(const ExperimentConfig& config);
PulseSchedule make_config_schedule(const ExperimentConfig& config, double gamma);

struct SweepRow {
  double gamma = 0.0;
  double yield = 0.0;
  double yield_stderr = 0.0;  // zero for the dense engine
  double absorbed_cis = 0.0;
  double residual_trace = 0.0;
  EngineKind engine = EngineKind::dense;
  double wall_time_s = 0.0;
  std::string error;  // non-empty when the row failed

  bool ok() const { return error.empty(); }
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by gamma
};

/// Worker count from RETINAL_WORKERS (default 1).
int worker_count_from_env();

/// One row per gamma, run on `workers` threads. Failed rows keep their
/// error message and the sweep continues.
///
/// fig2 reports the transit population at t_final = 200 fs, fig3 and
/// custom the trans-sink absorption at t_final.
SweepResult run_sweep(const ExperimentConfig& config, ExperimentKind kind, int workers = 1);

/// Requires continuous_200fs or pulsed_single_transit and t_final = 200.
SweepResult run_fig2_sweep(const ExperimentConfig& config, int workers = 1);
/// Requires pulsed_full and t_final = 1100.
SweepResult run_fig3_sweep(const ExperimentConfig& config, int workers = 1);

inline constexpr std::string_view kCsvHeader =
    "gamma_fs_inv,yield,absorbed_cis,residual_trace,engine,wall_time_s";

void write_csv(const SweepResult& result, std::ostream& out, bool deterministic = false);
/// Throws io_error when the file cannot be written.
void emit_csv(const SweepResult& result, const std::filesystem::path& path,
              bool deterministic = false);

// ---------------------------------------------------------------------------
// Acceptance suite

struct CriterionResult {
  std::string id;  // "A1" ... "A11"
  std::string description;
  bool passed = false;
  std::string measured;
};

struct AcceptanceOptions {
  ModelParams params = default_params();
  int n_points = kDefaultPoints;
  int small_points = 128;  // grid for the unraveling comparison
  double dt = 0.05;
  double mcwf_dt = 0.04;
  // Step of the closed-evolution energy check. Strang splitting conserves a
  // modified Hamiltonian whose offset from H scales as dt^2 (2.5e-5 relative
  // at 0.1 fs over 1.1 ps), so the check needs a finer step than the yields.
  double conservation_dt = 0.0125;
  int trajectories = 2000;
  std::uint64_t seed = 20140101;
  // Rates of the full-reaction monotonicity sweep. Coarser than the figure
  // grid: every point is a full 1.1 ps dense run.
  std::vector<double> sweep_gammas = default_gamma_grid(1e-2, 1e2, 10);
  // Continuous single-transit rates probed below and above the threshold.
  std::vector<double> low_gammas = {0.01, 0.1, 0.3, 1.0};
  std::vector<double> high_gammas = {4.0, 5.0, 7.0, 10.0, 14.0, 20.0};
  int workers = 1;
  // Criterion ids to run; empty runs all of them.
  std::vector<std::string> only;
  // Called as each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_passed() const;
};

AcceptanceReport check_acceptance(const AcceptanceOptions& options = {});

/// One line per criterion: "A1 PASS <description> | <measured>".
std::string format_result(const CriterionResult& result);

}  // namespace retinal
