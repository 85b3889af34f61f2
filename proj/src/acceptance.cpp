#include "retinal/analytic.hpp"
#include "retinal/error.hpp"
#include "retinal/experiments.hpp"
#include "retinal/trajectories.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace retinal {

bool AcceptanceReport::all_passed() const {
  return !criteria.empty() &&
         std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.passed; });
}

std::string format_result(const CriterionResult& r) {
  return fmt::format("{:<3} {} {} | {}", r.id, r.passed ? "PASS" : "FAIL", r.description,
                     r.measured);
}

namespace {

constexpr double kTargetDelta = 0.115;

// Propagations on one grid, memoized by (schedule, horizon) so criteria
// that look at the same run share it.
class Runner {
 public:
  Runner(const ModelParams& params, int n_points, double dt, bool with_sinks = true)
      : params_(params),
        grid_(build_grid(params, n_points)),
        h_(build_hamiltonian(params, grid_)),
        psi0_(initial_state(params, grid_)),
        x_c_(locate_crossing(params).x_c),
        dt_(dt) {
    if (with_sinks) sinks_ = make_sinks(params, grid_);
  }

  const EvolveResult& run(SchedulePreset preset, double gamma, double t_final,
                          EdgeShape edge = EdgeShape::rectangular, double ramp = 0.0) {
    const auto key = std::make_tuple(static_cast<int>(preset), gamma, t_final,
                                     static_cast<int>(edge), ramp);
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    ExperimentConfig c;
    c.preset = preset;
    c.edge = edge;
    c.ramp_fs = ramp;
    EvolveOptions o;
    o.dt = dt_;
    o.t_final = t_final;
    EvolveResult r = evolve(DensityState::pure(psi0_), h_, sinks_,
                            make_config_schedule(c, gamma), o);
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, std::move(r)).first->second;
  }

  double transit(SchedulePreset preset, double gamma) {
    const auto& r = run(preset, gamma, 200.0);
    return transit_population(r.state, r.ledger, grid_, x_c_);
  }

  double full_yield(double gamma, EdgeShape edge = EdgeShape::rectangular, double ramp = 0.0) {
    return run(SchedulePreset::pulsed_full, gamma, 1100.0, edge, ramp).ledger.absorbed_trans;
  }

  const ModelParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  const Hamiltonian& hamiltonian() const { return h_; }
  const std::vector<Sink>& sinks() const { return sinks_; }
  const Wavefunction& psi0() const { return psi0_; }

 private:
  ModelParams params_;
  Grid grid_;
  Hamiltonian h_;
  std::vector<Sink> sinks_;
  Wavefunction psi0_;
  double x_c_;
  double dt_;
  std::mutex mutex_;
  std::map<std::tuple<int, double, double, int, double>, EvolveResult> cache_;
};

double max_ledger_error(const EvolveResult& r) {
  double worst = 0.0;
  for (const auto& rec : r.records)
    worst = std::max(worst, std::abs(rec.trace + rec.absorbed_cis + rec.absorbed_trans - 1.0));
  return worst;
}

bool ledger_monotone(const SinkLedger& ledger) {
  double cis = 0.0, trans = 0.0;
  for (const auto& e : ledger.history) {
    if (e.absorbed_cis < cis - 1e-12 || e.absorbed_trans < trans - 1e-12) return false;
    cis = e.absorbed_cis;
    trans = e.absorbed_trans;
  }
  return true;
}

}  // namespace

AcceptanceReport check_acceptance(const AcceptanceOptions& opt) {
  AcceptanceReport report;
  auto emit = [&](CriterionResult r) {
    report.criteria.push_back(r);
    if (opt.on_result) opt.on_result(report.criteria.back());
  };
  // Engine failures mark the criterion as failed and the suite goes on.
  auto guarded = [&](std::string id, std::string description, auto&& body) {
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end())
      return;
    CriterionResult r{std::move(id), std::move(description), false, {}};
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.measured = fmt::format("error: {}", e.what());
    }
    emit(std::move(r));
  };

  guarded("A1", "calibration: delta = 0.115 +- 1e-6, arrival in [85, 135] fs", [&](auto& r) {
    const CrossingInfo c = locate_crossing(opt.params);
    r.passed = std::abs(c.delta - kTargetDelta) <= 1e-6 && c.arrival_time >= 85.0 &&
               c.arrival_time <= 135.0;
    r.measured = fmt::format("delta = {:.9f}, arrival = {:.2f} fs, delta_x = {:.6f}", c.delta,
                             c.arrival_time, opt.params.delta_x);
  });

  // Built on first use; a construction failure is reported by each criterion.
  std::unique_ptr<Runner> runner;
  auto need_runner = [&]() -> Runner& {
    if (!runner) runner = std::make_unique<Runner>(opt.params, opt.n_points, opt.dt);
    return *runner;
  };

  double natural = std::nan("");
  guarded("A2", "natural yield: gamma = 0, 1.1 ps, absorbed_trans = 0.65 +- 0.03", [&](auto& r) {
    natural = need_runner().full_yield(0.0);
    r.passed = std::abs(natural - 0.65) <= 0.03;
    r.measured = fmt::format("absorbed_trans = {:.5f}", natural);
  });

  guarded("A3", "sequential yield(7, 0.115) = 0.6566 +- 1e-4 and within 0.03 of A2",
          [&](auto& r) {
            const double s7 = sequential_yield(7, kTargetDelta);
            r.passed = std::abs(s7 - 0.6566) <= 1e-4 && std::abs(natural - s7) <= 0.03;
            r.measured = fmt::format("formula = {:.6f}, |A2 - formula| = {:.5f}", s7,
                                     std::abs(natural - s7));
          });

  guarded("A4", "coherent single transit: population at 200 fs = 0.486 +- 0.03", [&](auto& r) {
    const double t = need_runner().transit(SchedulePreset::continuous_200fs, 0.0);
    r.passed = std::abs(t - 0.486) <= 0.03;
    r.measured = fmt::format("transit = {:.5f}, exp(-2 pi delta) = {:.5f}", t,
                             diabatic_prob(kTargetDelta));
  });

  guarded("A5", "continuous gamma = 100 over [0, 200] fs: transit = 0.96 +- 0.02", [&](auto& r) {
    const double t = need_runner().transit(SchedulePreset::continuous_200fs, 100.0);
    r.passed = std::abs(t - 0.96) <= 0.02;
    r.measured = fmt::format("transit = {:.5f}", t);
  });

  guarded("A6", "threshold: continuous transit < 0.618 for gamma <= 1, > 0.618 for some gamma "
                "in (3.8, 20]",
          [&](auto& r) {
            const double threshold = dephased_limit_prob(kTargetDelta).passage_threshold;
            auto& run = need_runner();
            double worst_low = run.transit(SchedulePreset::continuous_200fs, 0.0);
            for (double g : opt.low_gammas)
              worst_low = std::max(worst_low, run.transit(SchedulePreset::continuous_200fs, g));
            std::string above = "none";
            bool crossed = false;
            for (double g : opt.high_gammas) {
              if (g <= 3.8 || g > 20.0) continue;
              const double t = run.transit(SchedulePreset::continuous_200fs, g);
              if (t > threshold) {
                crossed = true;
                above = fmt::format("{:.5f} at gamma = {}", t, g);
                break;
              }
            }
            r.passed = worst_low < threshold && crossed;
            r.measured = fmt::format("threshold = {:.5f}, max(gamma <= 1) = {:.5f}, first above: {}",
                                     threshold, worst_low, above);
          });

  double pulsed2 = std::nan("");
  guarded("A7", "pulsed full reaction: yield(2) = 0.80 +- 0.03, nondecreasing sweep, "
                "yield(100) > 0.95",
          [&](auto& r) {
            auto& run = need_runner();
            pulsed2 = run.full_yield(2.0);
            const double high = run.full_yield(100.0);
            std::vector<double> gammas = opt.sweep_gammas;
            std::sort(gammas.begin(), gammas.end());
            std::vector<double> yields(gammas.size());
            // Warm the cache in parallel; reads below are then cheap.
            std::atomic<int> cursor{0};
            {
              std::vector<std::jthread> pool;
              auto work = [&] {
                for (int i = cursor++; i < static_cast<int>(gammas.size()); i = cursor++)
                  yields[i] = run.full_yield(gammas[i]);
              };
              for (int w = 1; w < opt.workers; ++w) pool.emplace_back(work);
              work();
            }
            double worst_drop = 0.0;
            std::string where = "none";
            for (std::size_t i = 1; i < yields.size(); ++i) {
              const double drop = yields[i - 1] - yields[i];
              if (drop > worst_drop) {
                worst_drop = drop;
                where = fmt::format("gamma {} -> {}", gammas[i - 1], gammas[i]);
              }
            }
            // Drops at the level of the integration error are not a trend.
            const bool monotone = worst_drop <= 1e-6;
            r.passed = std::abs(pulsed2 - 0.80) <= 0.03 && monotone && high > 0.95;
            r.measured = fmt::format(
                "yield(2) = {:.5f}, yield(100) = {:.5f}, {} sweep points, largest drop {:.2e} ({})",
                pulsed2, high, gammas.size(), worst_drop, where);
          });

  guarded("A8", "pulsed single transit beats continuous at gamma = 2", [&](auto& r) {
    auto& run = need_runner();
    const double pulsed = run.transit(SchedulePreset::pulsed_single_transit, 2.0);
    const double continuous = run.transit(SchedulePreset::continuous_200fs, 2.0);
    r.passed = pulsed > continuous;
    r.measured = fmt::format("pulsed = {:.5f}, continuous = {:.5f}", pulsed, continuous);
  });

  guarded("A9", "conservation: no sinks trace drift < 1e-8, energy drift < 1e-6 rel; ledger "
                "identity < 1e-6",
          [&](auto& r) {
            Runner closed(opt.params, opt.n_points, opt.conservation_dt, /*with_sinks=*/false);
            const auto& free_run = closed.run(SchedulePreset::pulsed_full, 0.0, 1100.0);
            const double e0 = energy(closed.hamiltonian(), closed.psi0());
            const double e1 = energy(closed.hamiltonian(), free_run.state);
            const double trace_drift = std::abs(trace(free_run.state) - 1.0);
            const double energy_drift = std::abs(e1 - e0) / std::abs(e0);
            auto& run = need_runner();
            double ledger = 0.0;
            bool monotone = true;
            for (double g : {0.0, 2.0}) {
              const auto& res = run.run(SchedulePreset::pulsed_full, g, 1100.0);
              ledger = std::max(ledger, max_ledger_error(res));
              monotone = monotone && ledger_monotone(res.ledger);
            }
            r.passed = trace_drift < 1e-8 && energy_drift < 1e-6 && ledger < 1e-6 && monotone;
            r.measured = fmt::format(
                "trace drift = {:.2e}, energy drift = {:.2e} at dt = {}, ledger error = {:.2e}, "
                "monotone = {}",
                trace_drift, energy_drift, opt.conservation_dt, ledger, monotone);
          });

  guarded("A10", "unraveling: MCWF within 3 stderr of dense on 128 and 512 points, gamma in {0, 2}",
          [&](auto& r) {
            // The standard error is the binomial spread at the dense value.
            // The sample spread is zero when no trajectory reaches the trans
            // sink, which happens on the small grid where the yield is ~4e-4.
            // The production grid is checked as well, since the small one
            // aliases the returning packets and leaves little to compare.
            bool ok = true;
            std::string parts;
            for (int n : {opt.small_points, opt.n_points}) {
              Runner grid_run(opt.params, n, opt.mcwf_dt);
              for (double g : {0.0, 2.0}) {
                const double dense = grid_run.full_yield(g);
                ExperimentConfig c;
                EnsembleOptions eo;
                eo.dt = opt.mcwf_dt;
                eo.t_final = 1100.0;
                eo.workers = opt.workers;
                const EnsembleResult e = run_ensemble(
                    grid_run.params(), grid_run.grid(), grid_run.sinks(),
                    make_config_schedule(c, g), opt.trajectories, opt.seed, eo);
                const double se = std::sqrt(dense * (1.0 - dense) / opt.trajectories);
                const double diff = std::abs(e.yield_mean - dense);
                const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
                ok = ok && z <= 3.0;
                parts += fmt::format(
                    "{}{} pts gamma {}: dense {:.5f}, mcwf {:.5f} (sample se {:.5f}), {:.2f} se",
                    parts.empty() ? "" : "; ", n, g, dense, e.yield_mean, e.yield_stderr, z);
              }
            }
            r.passed = ok;
            r.measured = parts;
          });

  guarded("A11", "smooth 5 fs edges change the gamma = 2 full yield by < 0.02", [&](auto& r) {
    auto& run = need_runner();
    if (std::isnan(pulsed2)) pulsed2 = run.full_yield(2.0);
    const double smooth = run.full_yield(2.0, EdgeShape::smooth, 5.0);
    r.passed = std::abs(smooth - pulsed2) < 0.02;
    r.measured = fmt::format("rectangular = {:.5f}, smooth = {:.5f}, diff = {:.5f}", pulsed2,
                             smooth, std::abs(smooth - pulsed2));
  });

  return report;
}

}  // namespace retinal
