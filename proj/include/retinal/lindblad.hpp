#pragma once

// Density-operator propagation under the measurement master equation
//
//   d rho / dt = -i (H_eff rho - rho H_eff^dag) + gamma(t) sum_i (M_i rho M_i - {M_i, rho} / 2)
//
// with H_eff = H - i W (absorbing sinks) and M_i the projectors on the two
// electronic states.

#include "retinal/model.hpp"
#include "retinal/schedule.hpp"
#include "retinal/sinks.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace retinal {

/// rho over grid (x) {|1>, |2>}, stored as its four n x n electronic blocks.
struct DensityState {
  Eigen::MatrixXcd rho11;
  Eigen::MatrixXcd rho12;
  Eigen::MatrixXcd rho21;
  Eigen::MatrixXcd rho22;
  double time = 0.0;

  int n_points() const { return static_cast<int>(rho11.rows()); }

  static DensityState pure(const Wavefunction& psi, double time = 0.0);
  static DensityState from_full(const Eigen::MatrixXcd& rho, double time = 0.0);
  Eigen::MatrixXcd full() const;
};

double trace(const DensityState& state);

/// max |rho - rho^dag| over all entries.
double hermiticity_error(const DensityState& state);

/// Smallest eigenvalue of the full operator (dense diagonalization).
double min_eigenvalue(const DensityState& state);

/// trace(rho^2).
double purity(const DensityState& state);

/// tr(H rho) / tr(rho), with H applied column by column.
double energy(const Hamiltonian& h, const DensityState& state);

/// Electronic populations (trace of rho11, trace of rho22).
std::pair<double, double> electronic_populations(const DensityState& state);

/// Measurement dissipator for the projective pair M1 = 1 (x) |1><1|,
/// M2 = 1 (x) |2><2|. Expanding sum_i (M_i rho M_i - {M_i, rho}/2) block by
/// block, the diagonal blocks cancel (M_i^2 = M_i) and each coherence block
/// picks up -1/2 - 1/2 from the anticommutators with nothing fed back by the
/// sandwich terms, so the contribution is -gamma rho12 and -gamma rho21.
DensityState dephasing_generator(const DensityState& state, double gamma);

/// Full right-hand side of the master equation at fixed gamma. Meant for
/// reference integration on small grids.
DensityState lindblad_rhs(const DensityState& state, const Hamiltonian& h,
                          std::span<const Sink> sinks, double gamma);

struct LedgerEntry {
  double time = 0.0;
  double absorbed_cis = 0.0;
  double absorbed_trans = 0.0;
};

/// Cumulative population drained by each sink.
struct SinkLedger {
  double absorbed_cis = 0.0;
  double absorbed_trans = 0.0;
  std::vector<LedgerEntry> history;  // running totals after each step

  double total() const { return absorbed_cis + absorbed_trans; }
  void book(double time, double cis, double trans);
};

/// Trans-sink population plus excited-surface population beyond x_c.
double transit_population(const DensityState& state, const SinkLedger& ledger,
                          const Grid& grid, double x_c);

enum class Integrator {
  split_operator,  // Strang splitting, exact exponentials per factor
  rk4,             // classical RK4 on lindblad_rhs; small grids only
};

struct EvolveOptions {
  double dt = 0.1;           // fs
  double t_final = 1100.0;   // fs, absolute
  double record_interval = 5.0;
  Integrator integrator = Integrator::split_operator;
  // Propagate eigenvectors instead of the full matrix while gamma = 0.
  bool low_rank = true;
  // Eigenvalues are dropped from the bottom while their sum stays below this.
  double rank_tolerance = 1e-10;
  // Shortest gamma = 0 stretch (in steps) worth a diagonalization.
  int low_rank_min_steps = 200;
  // Thresholds of the step-instability abort.
  double max_trace_growth = 1e-6;
  double max_negativity = 1e-5;
};

struct ObserverRecord {
  double time = 0.0;
  double gamma = 0.0;
  double pop1 = 0.0;
  double pop2 = 0.0;
  double trace = 0.0;
  double absorbed_cis = 0.0;
  double absorbed_trans = 0.0;
};

/// Called at every record time with the synchronized state.
using Observer = std::function<void(const DensityState&, const SinkLedger&)>;

struct EvolveResult {
  DensityState state;
  SinkLedger ledger;
  std::vector<ObserverRecord> records;
  int max_rank = 0;  // largest rank kept while in low-rank mode (0 if never)
};

/// Largest step the split-operator integrator accepts: one radian of the
/// fastest coherent phase. RK4 additionally needs dt * gamma_max < 2.5.
double max_time_step(const ModelParams& params, const PulseSchedule& schedule,
                     Integrator integrator = Integrator::split_operator);

/// Integrates `state` from state.time to options.t_final.
///
/// Throws schedule_out_of_range when a window ends after t_final,
/// step_instability when the trace grows or a population goes negative
/// beyond the option thresholds, invalid_argument for a bad dt.
EvolveResult evolve(DensityState state, const Hamiltonian& h, std::span<const Sink> sinks,
                    const PulseSchedule& schedule, const EvolveOptions& options,
                    std::span<const Observer> observers = {});

}  // namespace retinal
