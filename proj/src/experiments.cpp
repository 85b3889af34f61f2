#include "retinal/experiments.hpp"

#include "retinal/analytic.hpp"
#include "retinal/error.hpp"
#include "retinal/trajectories.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace retinal {

std::string_view to_string(SchedulePreset preset) {
  switch (preset) {
    case SchedulePreset::continuous_200fs: return "continuous_200fs";
    case SchedulePreset::pulsed_single_transit: return "pulsed_single_transit";
    case SchedulePreset::pulsed_full: return "pulsed_full";
    case SchedulePreset::custom: return "custom";
  }
  return "?";
}

std::string_view to_string(EngineKind engine) {
  return engine == EngineKind::dense ? "dense" : "mcwf";
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::fig2: return "fig2";
    case ExperimentKind::fig3: return "fig3";
    case ExperimentKind::custom: return "custom";
  }
  return "?";
}

SchedulePreset parse_preset(std::string_view text) {
  for (auto p : {SchedulePreset::continuous_200fs, SchedulePreset::pulsed_single_transit,
                 SchedulePreset::pulsed_full, SchedulePreset::custom})
    if (text == to_string(p)) return p;
  fail(ErrorKind::config_error, fmt::format("unknown schedule preset '{}'", text));
}

EngineKind parse_engine(std::string_view text) {
  if (text == "dense") return EngineKind::dense;
  if (text == "mcwf" || text == "trajectories") return EngineKind::mcwf;
  fail(ErrorKind::config_error, fmt::format("unknown engine '{}'", text));
}

ExperimentKind parse_experiment(std::string_view text) {
  for (auto k : {ExperimentKind::fig2, ExperimentKind::fig3, ExperimentKind::custom})
    if (text == to_string(k)) return k;
  fail(ErrorKind::config_error, fmt::format("unknown experiment '{}'", text));
}

std::vector<std::pair<double, double>> preset_intervals(SchedulePreset preset) {
  switch (preset) {
    case SchedulePreset::continuous_200fs: return {{0.0, 200.0}};
    case SchedulePreset::pulsed_single_transit: return {{90.0, 120.0}};
    case SchedulePreset::pulsed_full:
      return {{90.0, 120.0}, {390.0, 420.0}, {670.0, 700.0}, {960.0, 990.0}};
    case SchedulePreset::custom: return {};
  }
  return {};
}

std::vector<double> default_gamma_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1)
    fail(ErrorKind::config_error, fmt::format("bad log range {}:{}:{}", lo, hi, count));
  std::vector<double> g{0.0};
  if (count == 1) {
    g.push_back(lo);
    return g;
  }
  const double step = std::log10(hi / lo) / (count - 1);
  for (int i = 0; i < count; ++i) g.push_back(lo * std::pow(10.0, step * i));
  g.back() = hi;
  return g;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  auto model_key = [](const ModelParams& p) {
    return std::tie(p.omega1, p.omega2, p.alpha, p.e_in, p.delta_e, p.mass);
  };
  return model_key(model) == model_key(o.model) && delta_x == o.delta_x &&
         n_points == o.n_points && padding == o.padding && dt == o.dt && t_final == o.t_final &&
         preset == o.preset && windows == o.windows && edge == o.edge && ramp_fs == o.ramp_fs &&
         gammas == o.gammas && engine == o.engine && trajectories == o.trajectories &&
         seed == o.seed && mcwf_dt == o.mcwf_dt && sinks == o.sinks &&
         output_dir == o.output_dir && deterministic == o.deterministic;
}

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x))
    fail(ErrorKind::config_error, fmt::format("{}: '{}' is not a number", key, v));
  return x;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    fail(ErrorKind::config_error, fmt::format("{}: '{}' is not an integer", key, v));
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(ErrorKind::config_error, fmt::format("{}: expected true or false, got '{}'", key, v));
}

std::vector<double> to_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (auto part : split(v, ',')) out.push_back(to_double(key, part));
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> entries;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorKind::config_error, fmt::format("line {}: expected key = value", line_no));
    const std::string key(trim(line.substr(0, eq)));
    if (!entries.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
      fail(ErrorKind::config_error, fmt::format("line {}: duplicate key '{}'", line_no, key));
  }

  ExperimentConfig c;
  bool have_gammas = false;
  for (const auto& [key, value] : entries) {
    const std::string_view v = value;
    if (key == "model.omega1") c.model.omega1 = to_double(key, v);
    else if (key == "model.omega2") c.model.omega2 = to_double(key, v);
    else if (key == "model.alpha") c.model.alpha = to_double(key, v);
    else if (key == "model.e_in") c.model.e_in = to_double(key, v);
    else if (key == "model.delta_e") c.model.delta_e = to_double(key, v);
    else if (key == "model.mass") c.model.mass = to_double(key, v);
    else if (key == "model.delta_x") {
      if (v == "auto") c.delta_x.reset();
      else c.delta_x = to_double(key, v);
    }
    else if (key == "grid.n_points") c.n_points = to_int<int>(key, v);
    else if (key == "grid.padding") c.padding = to_double(key, v);
    else if (key == "integrator.dt") c.dt = to_double(key, v);
    else if (key == "integrator.t_final") c.t_final = to_double(key, v);
    else if (key == "schedule.preset") c.preset = parse_preset(v);
    else if (key == "schedule.windows") {
      c.windows.clear();
      if (!v.empty()) {
        for (auto w : split(v, ',')) {
          const auto ends = split(w, ':');
          if (ends.size() != 2)
            fail(ErrorKind::config_error, fmt::format("{}: window '{}' is not t_on:t_off", key, w));
          c.windows.emplace_back(to_double(key, ends[0]), to_double(key, ends[1]));
        }
      }
    }
    else if (key == "schedule.edge") {
      if (v == "rectangular") c.edge = EdgeShape::rectangular;
      else if (v == "smooth") c.edge = EdgeShape::smooth;
      else fail(ErrorKind::config_error, fmt::format("{}: unknown edge '{}'", key, v));
    }
    else if (key == "schedule.ramp_fs") c.ramp_fs = to_double(key, v);
    else if (key == "sweep.gammas" || key == "sweep.log_range") {
      if (have_gammas)
        fail(ErrorKind::config_error, "give either sweep.gammas or sweep.log_range, not both");
      have_gammas = true;
      if (key == "sweep.gammas") {
        c.gammas = to_list(key, v);
      } else {
        const auto parts = split(v, ':');
        if (parts.size() != 3)
          fail(ErrorKind::config_error, fmt::format("{}: expected lo:hi:count", key));
        c.gammas = default_gamma_grid(to_double(key, parts[0]), to_double(key, parts[1]),
                                      to_int<int>(key, parts[2]));
      }
    }
    else if (key == "engine.kind") c.engine = parse_engine(v);
    else if (key == "engine.trajectories") c.trajectories = to_int<int>(key, v);
    else if (key == "engine.seed") c.seed = to_int<std::uint64_t>(key, v);
    else if (key == "engine.dt") c.mcwf_dt = to_double(key, v);
    else if (key == "sinks.eta") c.sinks.eta = to_double(key, v);
    else if (key == "sinks.onset") c.sinks.onset = to_double(key, v);
    else if (key == "sinks.width") c.sinks.width = to_double(key, v);
    else if (key == "output.dir") c.output_dir = std::string(v);
    else if (key == "output.deterministic") c.deterministic = to_bool(key, v);
    else fail(ErrorKind::config_error, fmt::format("unknown key '{}'", key));
  }

  for (double g : c.gammas)
    if (g < 0.0) fail(ErrorKind::config_error, fmt::format("negative rate {} in sweep", g));
  if (c.preset == SchedulePreset::custom && c.windows.empty())
    fail(ErrorKind::config_error, "schedule.preset = custom needs schedule.windows");
  if (c.preset != SchedulePreset::custom && !c.windows.empty())
    fail(ErrorKind::config_error, "schedule.windows is only used with schedule.preset = custom");
  if (c.trajectories < 1) fail(ErrorKind::config_error, "engine.trajectories must be positive");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io_error, fmt::format("cannot read {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&](std::string_view key, const auto& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  put("model.omega1", c.model.omega1);
  put("model.omega2", c.model.omega2);
  put("model.alpha", c.model.alpha);
  put("model.e_in", c.model.e_in);
  put("model.delta_e", c.model.delta_e);
  put("model.mass", c.model.mass);
  if (c.delta_x) put("model.delta_x", *c.delta_x);
  else put("model.delta_x", "auto");
  out += "\n";
  put("grid.n_points", c.n_points);
  put("grid.padding", c.padding);
  out += "\n";
  put("integrator.dt", c.dt);
  put("integrator.t_final", c.t_final);
  out += "\n";
  put("schedule.preset", to_string(c.preset));
  if (!c.windows.empty()) {
    std::vector<std::string> w;
    for (const auto& [on, off] : c.windows) w.push_back(fmt::format("{}:{}", on, off));
    put("schedule.windows", fmt::format("{}", fmt::join(w, ", ")));
  }
  put("schedule.edge", c.edge == EdgeShape::smooth ? "smooth" : "rectangular");
  put("schedule.ramp_fs", c.ramp_fs);
  out += "\n";
  put("sweep.gammas", fmt::format("{}", fmt::join(c.gammas, ", ")));
  out += "\n";
  put("engine.kind", to_string(c.engine));
  put("engine.trajectories", c.trajectories);
  put("engine.seed", c.seed);
  put("engine.dt", c.mcwf_dt);
  out += "\n";
  put("sinks.eta", c.sinks.eta);
  put("sinks.onset", c.sinks.onset);
  put("sinks.width", c.sinks.width);
  out += "\n";
  put("output.dir", c.output_dir.string());
  put("output.deterministic", c.deterministic ? "true" : "false");
  return out;
}

ExperimentConfig fig2_config(SchedulePreset preset) {
  ExperimentConfig c;
  c.preset = preset;
  c.t_final = 200.0;
  return c;
}

ExperimentConfig fig3_config() {
  ExperimentConfig c;
  c.preset = SchedulePreset::pulsed_full;
  c.t_final = 1100.0;
  return c;
}

ModelParams resolve_params(const ExperimentConfig& config) {
  ModelParams p = config.model;
  if (config.delta_x) {
    p.delta_x = *config.delta_x;
  } else {
    p = calibrate_offset(p, kDeltaCoefficient * p.alpha * p.alpha);
  }
  p.validate();
  return p;
}

PulseSchedule make_config_schedule(const ExperimentConfig& config, double gamma) {
  const auto intervals =
      config.preset == SchedulePreset::custom ? config.windows : preset_intervals(config.preset);
  std::vector<MeasurementWindow> windows;
  for (const auto& [on, off] : intervals) windows.push_back({on, off, gamma});
  return make_schedule(std::move(windows), config.edge, config.ramp_fs);
}

// ---------------------------------------------------------------------------
// Sweeps

int worker_count_from_env() {
  const char* v = std::getenv("RETINAL_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  const int n = to_int<int>("RETINAL_WORKERS", v);
  if (n < 1) fail(ErrorKind::config_error, "RETINAL_WORKERS must be at least 1");
  return n;
}

namespace {

// Runs task(i) for i < count on `workers` threads.
template <typename Task>
void parallel_for(int count, int workers, Task&& task) {
  std::atomic<int> cursor{0};
  auto worker = [&] {
    for (int i = cursor++; i < count; i = cursor++) task(i);
  };
  std::vector<std::jthread> pool;
  for (int w = 1; w < std::min(workers, count); ++w) pool.emplace_back(worker);
  worker();
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config, ExperimentKind kind, int workers) {
  const ModelParams params = resolve_params(config);
  const Grid grid = build_grid(params, config.n_points, config.padding);
  const Hamiltonian h = build_hamiltonian(params, grid);
  const auto sinks = make_sinks(params, grid, config.sinks);
  const Wavefunction psi0 = initial_state(params, grid);
  const double x_c = locate_crossing(params).x_c;
  const bool transit = kind == ExperimentKind::fig2;

  std::vector<double> gammas = config.gammas;
  std::sort(gammas.begin(), gammas.end());
  SweepResult result;
  result.rows.resize(gammas.size());

  parallel_for(static_cast<int>(gammas.size()), workers, [&](int i) {
    SweepRow& row = result.rows[i];
    row.gamma = gammas[i];
    row.engine = config.engine;
    const auto start = std::chrono::steady_clock::now();
    try {
      const PulseSchedule schedule = make_config_schedule(config, row.gamma);
      if (config.engine == EngineKind::dense) {
        EvolveOptions o;
        o.dt = config.dt;
        o.t_final = config.t_final;
        const EvolveResult r = evolve(DensityState::pure(psi0), h, sinks, schedule, o);
        row.yield = transit ? transit_population(r.state, r.ledger, grid, x_c)
                            : r.ledger.absorbed_trans;
        row.absorbed_cis = r.ledger.absorbed_cis;
        row.residual_trace = trace(r.state);
      } else {
        EnsembleOptions o;
        o.dt = config.mcwf_dt;
        o.t_final = config.t_final;
        if (transit) o.transit_cut = x_c;
        const EnsembleResult e =
            run_ensemble(params, grid, sinks, schedule, config.trajectories, config.seed, o);
        row.yield = transit ? e.transit_mean : e.yield_mean;
        row.yield_stderr = transit ? e.transit_stderr : e.yield_stderr;
        row.absorbed_cis = e.cis_mean;
        row.residual_trace = static_cast<double>(e.count_unresolved) / e.n_trajectories;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      row.yield = row.absorbed_cis = row.residual_trace = std::nan("");
    }
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return result;
}

SweepResult run_fig2_sweep(const ExperimentConfig& config, int workers) {
  if (config.preset != SchedulePreset::continuous_200fs &&
      config.preset != SchedulePreset::pulsed_single_transit)
    fail(ErrorKind::config_error, "fig2 needs the continuous_200fs or pulsed_single_transit preset");
  if (config.t_final != 200.0) fail(ErrorKind::config_error, "fig2 needs t_final = 200 fs");
  return run_sweep(config, ExperimentKind::fig2, workers);
}

SweepResult run_fig3_sweep(const ExperimentConfig& config, int workers) {
  if (config.preset != SchedulePreset::pulsed_full)
    fail(ErrorKind::config_error, "fig3 needs the pulsed_full preset");
  if (config.t_final != 1100.0) fail(ErrorKind::config_error, "fig3 needs t_final = 1100 fs");
  return run_sweep(config, ExperimentKind::fig3, workers);
}

void write_csv(const SweepResult& result, std::ostream& out, bool deterministic) {
  out << kCsvHeader << '\n';
  for (const auto& r : result.rows) {
    out << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{},{:.3f}\n", r.gamma, r.yield, r.absorbed_cis,
                       r.residual_trace, to_string(r.engine),
                       deterministic ? 0.0 : r.wall_time_s);
  }
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path, bool deterministic) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io_error, fmt::format("cannot write {}", path.string()));
  write_csv(result, out, deterministic);
  out.flush();
  if (!out) fail(ErrorKind::io_error, fmt::format("write to {} failed", path.string()));
}

}  // namespace retinal
