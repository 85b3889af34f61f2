#include "retinal/analytic.hpp"
#include "retinal/error.hpp"
#include "retinal/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace retinal;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const SimulationError& e) {
    return e.kind();
  }
  FAIL("expected a SimulationError");
  return ErrorKind::invalid_argument;
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream out;
  write_csv(r, out, true);
  return out.str();
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

// Cheap single-transit setup on the small grid.
ExperimentConfig small_fig2() {
  ExperimentConfig c = fig2_config(SchedulePreset::continuous_200fs);
  c.n_points = 128;
  c.gammas = {0.0, 0.5, 2.0};
  return c;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("presets expand to the literal windows") {
    using W = std::vector<std::pair<double, double>>;
    CHECK(preset_intervals(SchedulePreset::continuous_200fs) == W{{0, 200}});
    CHECK(preset_intervals(SchedulePreset::pulsed_single_transit) == W{{90, 120}});
    CHECK(preset_intervals(SchedulePreset::pulsed_full) ==
          W{{90, 120}, {390, 420}, {670, 700}, {960, 990}});
    CHECK(preset_intervals(SchedulePreset::custom).empty());

    ExperimentConfig c;
    const auto s = make_config_schedule(c, 2.0);
    REQUIRE(s.windows.size() == 4);
    CHECK(s.windows[2] == MeasurementWindow{670, 700, 2.0});
    c.preset = SchedulePreset::custom;
    c.windows = {{10, 20}};
    c.edge = EdgeShape::smooth;
    c.ramp_fs = 2.0;
    const auto t = make_config_schedule(c, 0.5);
    CHECK(t.windows == std::vector<MeasurementWindow>{{10, 20, 0.5}});
    CHECK(t.edge == EdgeShape::smooth);
  }

  TEST_CASE("default rate grid") {
    const auto g = default_gamma_grid();
    REQUIRE(g.size() == 41);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == doctest::Approx(1e-2));
    CHECK(g[40] == 1e2);
    for (int i = 2; i < 41; ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(1e4, 1.0 / 39)));
    CHECK(default_gamma_grid(1.0, 1.0, 1) == std::vector<double>{0.0, 1.0});
    CHECK(kind_of([] { default_gamma_grid(0.0, 1.0, 4); }) == ErrorKind::config_error);
    CHECK(kind_of([] { default_gamma_grid(2.0, 1.0, 4); }) == ErrorKind::config_error);
  }

  TEST_CASE("names") {
    for (auto p : {SchedulePreset::continuous_200fs, SchedulePreset::pulsed_single_transit,
                   SchedulePreset::pulsed_full, SchedulePreset::custom})
      CHECK(parse_preset(to_string(p)) == p);
    CHECK(parse_engine("dense") == EngineKind::dense);
    CHECK(parse_engine("mcwf") == EngineKind::mcwf);
    CHECK(parse_engine("trajectories") == EngineKind::mcwf);
    CHECK(parse_experiment("fig3") == ExperimentKind::fig3);
    CHECK(kind_of([] { parse_engine("rk4"); }) == ErrorKind::config_error);
    CHECK(kind_of([] { parse_preset("pulsed"); }) == ErrorKind::config_error);
    CHECK(kind_of([] { parse_experiment("fig4"); }) == ErrorKind::config_error);
  }

  TEST_CASE("config round trip") {
    const ExperimentConfig d;
    CHECK(parse_config(serialize_config(d)) == d);
    CHECK(parse_config("") == d);

    ExperimentConfig c;
    c.model.alpha = 0.12;
    c.model.omega1 = 1.0 / 3.0;
    c.delta_x = 150.25;
    c.n_points = 1024;
    c.padding = 45.5;
    c.dt = 0.05;
    c.t_final = 400.0;
    c.preset = SchedulePreset::custom;
    c.windows = {{10.0, 20.5}, {100.0, 130.0}};
    c.edge = EdgeShape::smooth;
    c.ramp_fs = 5.0;
    c.gammas = {0.0, 0.1, 1.0 / 7.0, 30.0};
    c.engine = EngineKind::mcwf;
    c.trajectories = 321;
    c.seed = 18446744073709551557ull;
    c.mcwf_dt = 0.02;
    c.sinks = {2.0, 12.0, 40.0};
    c.output_dir = "results/run 1";
    c.deterministic = true;
    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
  }

  TEST_CASE("config parsing") {
    const auto c = parse_config(R"(
      # comment line
      model.alpha = 0.2   # trailing comment
      sweep.log_range = 0.1:10:3
      schedule.preset = pulsed_single_transit
      engine.kind = trajectories
      model.delta_x = auto
    )");
    CHECK(c.model.alpha == 0.2);
    CHECK(c.gammas.size() == 4);
    CHECK(c.gammas[2] == doctest::Approx(1.0));
    CHECK(c.preset == SchedulePreset::pulsed_single_transit);
    CHECK(c.engine == EngineKind::mcwf);
    CHECK_FALSE(c.delta_x.has_value());
    CHECK(parse_config("sweep.gammas =").gammas.empty());

    for (const char* bad : {"model.alhpa = 0.1", "model.alpha = 0.1\nmodel.alpha = 0.2",
                            "model.alpha = fast", "model.alpha", "grid.n_points = 5.5",
                            "sweep.gammas = 1\nsweep.log_range = 1:2:3", "sweep.gammas = 1, -2",
                            "schedule.preset = custom", "schedule.windows = 1:2",
                            "schedule.preset = custom\nschedule.windows = 1-2",
                            "schedule.edge = soft", "output.deterministic = yes",
                            "engine.trajectories = 0", "model.alpha = inf"}) {
      INFO(bad);
      CHECK(kind_of([&] { parse_config(bad); }) == ErrorKind::config_error);
    }
    CHECK(kind_of([] { load_config("/nonexistent/dir/run.cfg"); }) == ErrorKind::io_error);
  }

  TEST_CASE("config files") {
    const auto dir = std::filesystem::temp_directory_path() / "retinal_config_test";
    std::filesystem::create_directories(dir);
    ExperimentConfig c = fig2_config();
    c.gammas = {0.0, 3.0};
    std::ofstream(dir / "a.cfg") << serialize_config(c);
    CHECK(load_config(dir / "a.cfg") == c);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("parameter resolution") {
    ExperimentConfig c;
    CHECK(resolve_params(c) == default_params());
    c.delta_x = 150.0;
    CHECK(resolve_params(c).delta_x == 150.0);
    c.delta_x = -1.0;
    CHECK(kind_of([&] { resolve_params(c); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("figure presets and preconditions") {
    CHECK(fig2_config().t_final == 200.0);
    CHECK(fig2_config().preset == SchedulePreset::continuous_200fs);
    CHECK(fig3_config().t_final == 1100.0);
    CHECK(fig3_config().preset == SchedulePreset::pulsed_full);

    ExperimentConfig c = small_fig2();
    c.preset = SchedulePreset::pulsed_full;
    CHECK(kind_of([&] { run_fig2_sweep(c); }) == ErrorKind::config_error);
    c = small_fig2();
    c.t_final = 300.0;
    CHECK(kind_of([&] { run_fig2_sweep(c); }) == ErrorKind::config_error);
    c = fig3_config();
    c.t_final = 1000.0;
    CHECK(kind_of([&] { run_fig3_sweep(c); }) == ErrorKind::config_error);
    c = fig3_config();
    c.preset = SchedulePreset::continuous_200fs;
    CHECK(kind_of([&] { run_fig3_sweep(c); }) == ErrorKind::config_error);
  }

  TEST_CASE("csv output") {
    SweepResult empty;
    CHECK(csv_of(empty) == std::string(kCsvHeader) + "\n");

    SweepResult three;
    three.rows = {{0.0, 0.65, 0.0, 0.34, 0.01, EngineKind::dense, 1.5, {}},
                  {1.0, 0.123456789012, 0.0, 0.5, 0.3, EngineKind::dense, 2.0, {}},
                  {2.0, 0.7, 0.01, 0.2, 0.1, EngineKind::mcwf, 3.25, {}}};
    const std::string text = csv_of(three);
    CHECK(count_lines(text) == 4);
    CHECK(text.find("1,0.123456789,0.5,0.3,dense,0.000\n") != std::string::npos);
    std::ostringstream timed;
    write_csv(three, timed, false);
    CHECK(timed.str().find(",mcwf,3.250\n") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "retinal_csv_test";
    emit_csv(three, dir / "nested" / "out.csv", true);
    std::ifstream in(dir / "nested" / "out.csv");
    std::stringstream read;
    read << in.rdbuf();
    CHECK(read.str() == text);
    std::filesystem::remove_all(dir);
    CHECK(kind_of([&] { emit_csv(three, "/proc/retinal/out.csv"); }) == ErrorKind::io_error);
  }

  TEST_CASE("dense sweeps are reproducible and order independent") {
    ExperimentConfig c = small_fig2();
    const SweepResult a = run_fig2_sweep(c);
    REQUIRE(a.rows.size() == 3);
    for (const auto& row : a.rows) CHECK(row.ok());
    CHECK(a.rows[0].gamma == 0.0);
    CHECK(a.rows[2].gamma == 2.0);
    c.gammas = {2.0, 0.0, 0.5};
    const SweepResult b = run_fig2_sweep(c, 2);
    CHECK(csv_of(a) == csv_of(b));
    CHECK(csv_of(run_fig2_sweep(small_fig2())) == csv_of(a));
  }

  TEST_CASE("full-horizon rows account for all population") {
    ExperimentConfig c = fig3_config();
    c.n_points = 128;
    c.gammas = {0.0, 1.0};
    for (auto engine : {EngineKind::dense, EngineKind::mcwf}) {
      c.engine = engine;
      c.trajectories = 40;
      for (const auto& row : run_fig3_sweep(c).rows) {
        REQUIRE(row.ok());
        CHECK(row.engine == engine);
        CHECK(row.yield + row.absorbed_cis + row.residual_trace == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(row.wall_time_s > 0.0);
      }
    }
  }

  TEST_CASE("a failing row does not stop the sweep") {
    ExperimentConfig c = small_fig2();
    c.engine = EngineKind::mcwf;
    c.trajectories = 10;
    c.gammas = {5.0, 0.5};  // 5 fs^-1 with the 0.04 fs jump step is too coarse
    const SweepResult r = run_fig2_sweep(c);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].ok());
    CHECK_FALSE(r.rows[1].ok());
    CHECK(r.rows[1].error.find("step-too-large") != std::string::npos);
    CHECK(std::isnan(r.rows[1].yield));
    CHECK(csv_of(r).find("5,nan,nan,nan,mcwf") != std::string::npos);
  }

  TEST_CASE("single transit sweep at the coherent limit") {
    ExperimentConfig c = fig2_config();
    c.gammas = {0.0};
    const auto rows = run_fig2_sweep(c).rows;
    REQUIRE(rows.size() == 1);
    CHECK(std::abs(rows[0].yield - diabatic_prob(locate_crossing(resolve_params(c)).delta)) < 0.03);
  }

  TEST_CASE("sink shape sensitivity") {
    ExperimentConfig c = fig3_config();
    c.gammas = {0.0};
    const double base = run_fig3_sweep(c).rows.at(0).yield;
    for (auto [eta, width] : {std::pair{2.0, 1.0}, {0.5, 1.0}, {1.0, 2.0}, {1.0, 0.5}}) {
      ExperimentConfig v = c;
      v.sinks.eta *= eta;
      v.sinks.width *= width;
      const double y = run_fig3_sweep(v).rows.at(0).yield;
      MESSAGE("eta x" << eta << ", width x" << width << ": yield " << y << " (base " << base << ")");
      CHECK(std::abs(y - base) < 0.01);
    }
  }

  TEST_CASE("worker count from the environment") {
    ::unsetenv("RETINAL_WORKERS");
    CHECK(worker_count_from_env() == 1);
    ::setenv("RETINAL_WORKERS", "3", 1);
    CHECK(worker_count_from_env() == 3);
    ::setenv("RETINAL_WORKERS", "0", 1);
    CHECK(kind_of([] { worker_count_from_env(); }) == ErrorKind::config_error);
    ::setenv("RETINAL_WORKERS", "many", 1);
    CHECK(kind_of([] { worker_count_from_env(); }) == ErrorKind::config_error);
    ::unsetenv("RETINAL_WORKERS");
  }

  TEST_CASE("acceptance reporting") {
    AcceptanceOptions o;
    o.only = {"A1"};
    int seen = 0;
    o.on_result = [&](const CriterionResult&) { ++seen; };
    const auto good = check_acceptance(o);
    REQUIRE(good.criteria.size() == 1);
    CHECK(seen == 1);
    CHECK(good.all_passed());
    CHECK(format_result(good.criteria[0]).rfind("A1  PASS calibration", 0) == 0);

    // Negative control: a 20% offset error breaks the calibration check.
    o.params.delta_x *= 1.2;
    const auto bad = check_acceptance(o);
    REQUIRE(bad.criteria.size() == 1);
    CHECK_FALSE(bad.all_passed());
    CHECK(format_result(bad.criteria[0]).find("FAIL") != std::string::npos);

    CHECK_FALSE(AcceptanceReport{}.all_passed());
  }
}
