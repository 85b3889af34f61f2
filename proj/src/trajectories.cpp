#include "retinal/trajectories.hpp"

#include "propagation.hpp"
#include "retinal/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <mutex>
#include <cmath>
#include <thread>

namespace retinal {

TrajectoryState TrajectoryState::start(const Wavefunction& psi, std::uint64_t seed,
                                       std::uint64_t stream, double time) {
  TrajectoryState s;
  s.psi = psi;
  s.time = time;
  s.stream = stream;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  s.rng.seed(seq);
  s.threshold = std::uniform_real_distribution<double>(0.0, 1.0)(s.rng);
  return s;
}

namespace {

struct StepCore {
  StepCore(const Hamiltonian& h, std::span<const Sink> sinks, double dt)
      : kernel(h, sinks, dt), columns(kernel, 1), weight(Eigen::VectorXd::Ones(1)) {}

  detail::SplitStepKernel kernel;
  detail::ColumnPropagator columns;
  Eigen::VectorXd weight;

  void kick(TrajectoryState& s, bool half) const { columns.kinetic(s.psi, half); }
  detail::SinkRates potential(TrajectoryState& s) const { return columns.pointwise(s.psi, weight); }

  // Books the norm lost during the step, terminates the trajectory when its
  // survival drops below the threshold and samples a measurement jump.
  void settle(TrajectoryState& s, double norm_before, const detail::SinkRates& rates,
              double gamma, double t_end) const {
    const double norm_after = s.psi.squaredNorm();
    const double loss = norm_before - norm_after;
    const double total = rates.cis + rates.trans;
    if (total > 0.0) {
      s.absorbed_cis += loss * rates.cis / total;
      s.absorbed_trans += loss * rates.trans / total;
    }
    s.time = t_end;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    if (norm_after <= s.threshold) {
      s.alive = false;
      s.termination_time = t_end;
      const double share_cis = total > 0.0 ? rates.cis / total : 0.0;
      s.outcome = uniform(s.rng) < share_cis ? Outcome::cis : Outcome::trans;
      return;
    }
    if (gamma <= 0.0) return;
    if (uniform(s.rng) >= -std::expm1(-gamma * kernel.dt())) return;
    const auto n = s.psi.size() / 2;
    const double p1 = s.psi.head(n).squaredNorm();
    const double p2 = s.psi.tail(n).squaredNorm();
    if (uniform(s.rng) * (p1 + p2) < p1) {
      s.psi.head(n) *= std::sqrt((p1 + p2) / p1);
      s.psi.tail(n).setZero();
    } else {
      s.psi.tail(n) *= std::sqrt((p1 + p2) / p2);
      s.psi.head(n).setZero();
    }
    ++s.jumps;
  }

  void check_rate(double gamma) const {
    if (gamma * kernel.dt() >= 0.1)
      fail(ErrorKind::step_too_large,
           fmt::format("jump probability gamma dt = {:.3g} must stay below 0.1",
                       gamma * kernel.dt()));
  }
};

}  // namespace

struct JumpStepper::Impl : StepCore {
  using StepCore::StepCore;
};

JumpStepper::JumpStepper(const Hamiltonian& h, std::span<const Sink> sinks, double dt)
    : impl_(std::make_unique<Impl>(h, sinks, dt)) {
  if (!(dt > 0.0)) fail(ErrorKind::invalid_argument, "dt must be positive");
}

JumpStepper::~JumpStepper() = default;
JumpStepper::JumpStepper(JumpStepper&&) noexcept = default;

double JumpStepper::dt() const { return impl_->kernel.dt(); }

void JumpStepper::step(TrajectoryState& state, double gamma) const {
  impl_->check_rate(gamma);
  if (!state.alive) return;
  const double norm_before = state.psi.squaredNorm();
  impl_->kick(state, true);
  const auto rates = impl_->potential(state);
  impl_->kick(state, true);
  impl_->settle(state, norm_before, rates, gamma, state.time + dt());
}

void jump_step(TrajectoryState& state, const Hamiltonian& h, std::span<const Sink> sinks,
               double gamma, double dt) {
  JumpStepper(h, sinks, dt).step(state, gamma);
}

namespace {

// Per-trajectory samples at each checkpoint: pop1, pop2, cis, trans.
struct Sample {
  Outcome outcome = Outcome::unresolved;
  int jumps = 0;
  double transit = 0.0;
  std::vector<std::array<double, 4>> checkpoints;
};

void record(const TrajectoryState& s, std::array<double, 4>& out) {
  if (s.alive) {
    const auto n = s.psi.size() / 2;
    const double p1 = s.psi.head(n).squaredNorm();
    const double p2 = s.psi.tail(n).squaredNorm();
    out = {p1 / (p1 + p2), p2 / (p1 + p2), 0.0, 0.0};
  } else {
    out = {0.0, 0.0, s.outcome == Outcome::cis ? 1.0 : 0.0, s.outcome == Outcome::trans ? 1.0 : 0.0};
  }
}

std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace

EnsembleResult run_ensemble(const ModelParams& params, const Grid& grid,
                            std::span<const Sink> sinks, const PulseSchedule& schedule,
                            int n_trajectories, std::uint64_t seed,
                            const EnsembleOptions& options) {
  if (n_trajectories < 1) fail(ErrorKind::invalid_argument, "need at least one trajectory");
  if (!(options.t_final > 0.0)) fail(ErrorKind::invalid_argument, "t_final must be positive");
  schedule.validate();
  if (schedule.end_time() > options.t_final + 1e-9)
    fail(ErrorKind::schedule_out_of_range,
         fmt::format("schedule runs until {} fs, past t_final = {} fs", schedule.end_time(),
                     options.t_final));

  const int n_steps = static_cast<int>(std::ceil(options.t_final / options.dt - 1e-9));
  const double h = options.t_final / n_steps;
  std::vector<double> gammas(static_cast<std::size_t>(n_steps));
  for (int s = 0; s < n_steps; ++s) gammas[s] = integrated_gamma(schedule, s * h, (s + 1) * h) / h;

  std::vector<int> checkpoint_steps;
  for (double t : options.checkpoints) {
    if (t < 0.0 || t > options.t_final + 1e-9)
      fail(ErrorKind::invalid_argument, fmt::format("checkpoint {} fs outside the run", t));
    checkpoint_steps.push_back(static_cast<int>(std::lround(t / h)));
  }

  const Hamiltonian ham = build_hamiltonian(params, grid);
  const Wavefunction psi0 = initial_state(params, grid);
  const StepCore impl(ham, sinks, h);
  for (double g : gammas) impl.check_rate(g);

  auto run_one = [&](int index) {
    Sample sample;
    sample.checkpoints.resize(checkpoint_steps.size());
    TrajectoryState s = TrajectoryState::start(psi0, seed, static_cast<std::uint64_t>(index));
    std::size_t next = 0;
    auto take = [&](int step) {
      while (next < checkpoint_steps.size() && checkpoint_steps[next] == step)
        record(s, sample.checkpoints[next++]);
    };
    take(0);
    double norm = s.psi.squaredNorm();
    impl.kick(s, true);
    for (int step = 0; step < n_steps && s.alive; ++step) {
      const auto rates = impl.potential(s);
      // Surface projectors commute with the kinetic factor, so jumps and
      // checkpoints can act on the half-kicked state.
      impl.kick(s, step + 1 == n_steps);
      impl.settle(s, norm, rates, gammas[step], (step + 1) * h);
      norm = s.psi.squaredNorm();
      take(step + 1);
    }
    while (next < checkpoint_steps.size()) record(s, sample.checkpoints[next++]);
    if (options.transit_cut) {
      if (s.alive) {
        const Eigen::ArrayXd p2 = s.psi.tail(grid.n_points).array().abs2();
        sample.transit = (grid.x > *options.transit_cut).select(p2, 0.0).sum() / s.psi.squaredNorm();
      } else {
        sample.transit = s.outcome == Outcome::trans ? 1.0 : 0.0;
      }
    }
    sample.outcome = s.outcome;
    sample.jumps = s.jumps;
    return sample;
  };

  std::vector<Sample> samples(static_cast<std::size_t>(n_trajectories));
  std::atomic<int> cursor{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = cursor++; i < n_trajectories; i = cursor++) {
      try {
        samples[i] = run_one(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        cursor = n_trajectories;
      }
    }
  };
  const int workers = std::clamp(options.workers, 1, n_trajectories);
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  EnsembleResult result;
  result.n_trajectories = n_trajectories;
  std::vector<double> trans, cis, transit;
  double jumps = 0.0;
  for (const auto& s : samples) {
    trans.push_back(s.outcome == Outcome::trans ? 1.0 : 0.0);
    cis.push_back(s.outcome == Outcome::cis ? 1.0 : 0.0);
    result.count_cis += s.outcome == Outcome::cis;
    result.count_trans += s.outcome == Outcome::trans;
    result.count_unresolved += s.outcome == Outcome::unresolved;
    jumps += s.jumps;
    transit.push_back(s.transit);
  }
  std::tie(result.transit_mean, result.transit_stderr) = mean_stderr(transit);
  std::tie(result.yield_mean, result.yield_stderr) = mean_stderr(trans);
  result.cis_mean = mean_stderr(cis).first;
  result.mean_jumps = jumps / n_trajectories;

  for (std::size_t c = 0; c < checkpoint_steps.size(); ++c) {
    CheckpointMean m;
    m.time = checkpoint_steps[c] * h;
    std::array<std::vector<double>, 4> columns;
    for (const auto& s : samples)
      for (int k = 0; k < 4; ++k) columns[k].push_back(s.checkpoints[c][k]);
    std::tie(m.pop1, m.pop1_stderr) = mean_stderr(columns[0]);
    std::tie(m.pop2, m.pop2_stderr) = mean_stderr(columns[1]);
    std::tie(m.absorbed_cis, m.absorbed_cis_stderr) = mean_stderr(columns[2]);
    std::tie(m.absorbed_trans, m.absorbed_trans_stderr) = mean_stderr(columns[3]);
    result.checkpoints.push_back(m);
  }
  return result;
}

}  // namespace retinal
