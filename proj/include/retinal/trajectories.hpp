#pragma once

// Quantum-jump unraveling of the measurement master equation. Each
// trajectory evolves under H - i W; the uniform -i gamma / 2 part of the
// effective Hamiltonian only rescales the norm and is accounted for by the
// jump probability, so the norm that is lost measures sink absorption alone.

#include "retinal/model.hpp"
#include "retinal/schedule.hpp"
#include "retinal/sinks.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace retinal {

enum class Outcome { cis, trans, unresolved };

struct TrajectoryState {
  Wavefunction psi;  // unnormalized; squaredNorm() is the survival probability
  double time = 0.0;
  std::uint64_t stream = 0;  // trajectory index inside its ensemble
  std::mt19937_64 rng;
  bool alive = true;
  Outcome outcome = Outcome::unresolved;
  double termination_time = 0.0;
  // Norm booked into each sink so far; booked + |psi|^2 = 1.
  double absorbed_cis = 0.0;
  double absorbed_trans = 0.0;
  // Survival level at which the trajectory is absorbed.
  double threshold = 0.0;
  int jumps = 0;

  /// Fresh trajectory on substream `stream` of `seed`.
  static TrajectoryState start(const Wavefunction& psi, std::uint64_t seed, std::uint64_t stream,
                               double time = 0.0);
};

/// Reusable step operator for fixed (h, sinks, dt).
class JumpStepper {
 public:
  JumpStepper(const Hamiltonian& h, std::span<const Sink> sinks, double dt);
  ~JumpStepper();
  JumpStepper(JumpStepper&&) noexcept;

  double dt() const;

  /// One first-order step at (step-averaged) rate `gamma`: split-step
  /// propagation, sink bookkeeping with termination, then a measurement jump
  /// with probability 1 - exp(-gamma dt). Throws step_too_large if gamma dt >= 0.1.
  void step(TrajectoryState& state, double gamma) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Single step with a freshly built stepper. Convenient, not fast.
void jump_step(TrajectoryState& state, const Hamiltonian& h, std::span<const Sink> sinks,
               double gamma, double dt);

struct CheckpointMean {
  double time = 0.0;
  double pop1 = 0.0, pop1_stderr = 0.0;
  double pop2 = 0.0, pop2_stderr = 0.0;
  double absorbed_cis = 0.0, absorbed_cis_stderr = 0.0;
  double absorbed_trans = 0.0, absorbed_trans_stderr = 0.0;
};

struct EnsembleResult {
  int n_trajectories = 0;
  double yield_mean = 0.0;  // fraction of trajectories ending in the trans sink
  double yield_stderr = 0.0;
  double cis_mean = 0.0;
  int count_cis = 0;
  int count_trans = 0;
  int count_unresolved = 0;
  double mean_jumps = 0.0;
  double transit_mean = 0.0;
  double transit_stderr = 0.0;
  std::vector<CheckpointMean> checkpoints;
};

struct EnsembleOptions {
  double dt = 0.04;  // fs
  double t_final = 1100.0;
  std::vector<double> checkpoints;  // times at which populations are averaged
  int workers = 1;
  // When set, also average the transit population at t_final: trans
  // outcomes plus, for surviving trajectories, the surface-2 weight at
  // x > transit_cut.
  std::optional<double> transit_cut;
};

/// Runs n independent trajectories from the initial state. Results depend
/// only on (inputs, seed), not on the number of workers.
EnsembleResult run_ensemble(const ModelParams& params, const Grid& grid,
                            std::span<const Sink> sinks, const PulseSchedule& schedule,
                            int n_trajectories, std::uint64_t seed,
                            const EnsembleOptions& options = {});

}  // namespace retinal
