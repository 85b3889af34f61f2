#include "retinal/lindblad.hpp"

#include "propagation.hpp"
#include "retinal/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <optional>

namespace retinal {

using cd = std::complex<double>;

DensityState DensityState::pure(const Wavefunction& psi, double time) {
  const auto n = psi.size() / 2;
  DensityState s;
  s.rho11 = psi.head(n) * psi.head(n).adjoint();
  s.rho12 = psi.head(n) * psi.tail(n).adjoint();
  s.rho21 = psi.tail(n) * psi.head(n).adjoint();
  s.rho22 = psi.tail(n) * psi.tail(n).adjoint();
  s.time = time;
  return s;
}

DensityState DensityState::from_full(const Eigen::MatrixXcd& rho, double time) {
  const auto n = rho.rows() / 2;
  DensityState s;
  s.rho11 = rho.topLeftCorner(n, n);
  s.rho12 = rho.topRightCorner(n, n);
  s.rho21 = rho.bottomLeftCorner(n, n);
  s.rho22 = rho.bottomRightCorner(n, n);
  s.time = time;
  return s;
}

Eigen::MatrixXcd DensityState::full() const {
  const auto n = rho11.rows();
  Eigen::MatrixXcd rho(2 * n, 2 * n);
  rho << rho11, rho12, rho21, rho22;
  return rho;
}

double trace(const DensityState& state) {
  return state.rho11.trace().real() + state.rho22.trace().real();
}

double hermiticity_error(const DensityState& s) {
  return std::max({(s.rho11 - s.rho11.adjoint()).cwiseAbs().maxCoeff(),
                   (s.rho22 - s.rho22.adjoint()).cwiseAbs().maxCoeff(),
                   (s.rho12 - s.rho21.adjoint()).cwiseAbs().maxCoeff()});
}

double min_eigenvalue(const DensityState& state) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(state.full(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double purity(const DensityState& s) {
  // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return s.rho11.squaredNorm() + s.rho12.squaredNorm() + s.rho21.squaredNorm() +
         s.rho22.squaredNorm();
}

double energy(const Hamiltonian& h, const DensityState& state) {
  const Eigen::MatrixXcd rho = state.full();
  double e = 0.0;
  for (Eigen::Index j = 0; j < rho.cols(); ++j) e += retinal::apply(h, Wavefunction(rho.col(j)))[j].real();
  return e / trace(state);
}

std::pair<double, double> electronic_populations(const DensityState& state) {
  return {state.rho11.trace().real(), state.rho22.trace().real()};
}

DensityState dephasing_generator(const DensityState& state, double gamma) {
  if (gamma < 0.0) fail(ErrorKind::invalid_argument, "gamma must be non-negative");
  const auto n = state.n_points();
  DensityState d;
  d.rho11 = Eigen::MatrixXcd::Zero(n, n);
  d.rho22 = Eigen::MatrixXcd::Zero(n, n);
  d.rho12 = -gamma * state.rho12;
  d.rho21 = -gamma * state.rho21;
  d.time = state.time;
  return d;
}

DensityState lindblad_rhs(const DensityState& state, const Hamiltonian& h,
                          std::span<const Sink> sinks, double gamma) {
  const int n = h.n_points();
  Eigen::MatrixXcd h_eff = dense_matrix(h);
  for (const auto& s : sinks) {
    const int off = (s.surface - 1) * n;
    h_eff.diagonal().segment(off, n).array() -= cd(0.0, 1.0) * s.profile.cast<cd>();
  }
  const Eigen::MatrixXcd rho = state.full();
  const Eigen::MatrixXcd coherent = -cd(0.0, 1.0) * (h_eff * rho - rho * h_eff.adjoint());
  DensityState out = DensityState::from_full(coherent, state.time);
  const DensityState d = dephasing_generator(state, gamma);
  out.rho12 += d.rho12;
  out.rho21 += d.rho21;
  return out;
}

void SinkLedger::book(double time, double cis, double trans) {
  absorbed_cis += cis;
  absorbed_trans += trans;
  history.push_back({time, absorbed_cis, absorbed_trans});
}

double transit_population(const DensityState& state, const SinkLedger& ledger, const Grid& grid,
                          double x_c) {
  const Eigen::ArrayXd d22 = state.rho22.diagonal().real().array();
  return ledger.absorbed_trans + (grid.x > x_c).select(d22, 0.0).sum();
}

double max_time_step(const ModelParams& params, const PulseSchedule& schedule,
                     Integrator integrator) {
  const double coherent = 1.0 / rabi_frequency(params);
  if (integrator == Integrator::split_operator) return coherent;
  const double g = peak_gamma(schedule);
  return g > 0.0 ? std::min(coherent, 2.5 / g) : coherent;
}

namespace {

using detail::DensePropagator;
using detail::FactorState;
using detail::SinkRates;
using detail::SplitStepKernel;

struct StepPlan {
  int n_steps = 0;
  double h = 0.0;
  int record_every = 1;
};

StepPlan plan_steps(double t0, const EvolveOptions& options) {
  if (!(options.dt > 0.0)) fail(ErrorKind::invalid_argument, "dt must be positive");
  if (!(options.t_final > t0))
    fail(ErrorKind::invalid_argument,
         fmt::format("t_final = {} must exceed the state time {}", options.t_final, t0));
  StepPlan p;
  const double span = options.t_final - t0;
  p.n_steps = static_cast<int>(std::ceil(span / options.dt - 1e-9));
  p.h = span / p.n_steps;
  p.record_every = std::max(1, static_cast<int>(std::lround(options.record_interval / p.h)));
  return p;
}

void book_loss(SinkLedger& ledger, double time, double loss, const SinkRates& rates) {
  const double total = rates.cis + rates.trans;
  if (total > 0.0) {
    ledger.book(time, loss * rates.cis / total, loss * rates.trans / total);
  } else {
    ledger.book(time, 0.0, 0.0);
  }
}

void check_populations(double d_min, double t, const EvolveOptions& o) {
  if (d_min < -o.max_negativity)
    fail(ErrorKind::step_instability,
         fmt::format("population density {:.3e} < -{:.1e} at t = {:.3f} fs", d_min,
                     o.max_negativity, t));
}

EvolveResult evolve_split(DensityState state, const Hamiltonian& h, std::span<const Sink> sinks,
                          const PulseSchedule& schedule, const EvolveOptions& options,
                          std::span<const Observer> observers) {
  const double t_start = state.time;
  const StepPlan plan = plan_steps(t_start, options);
  const SplitStepKernel kernel(h, sinks, plan.h);
  const DensePropagator dense(kernel);
  const int n = h.n_points();

  std::vector<double> gammas(static_cast<std::size_t>(plan.n_steps));
  std::vector<bool> factored(gammas.size(), false);
  for (int s = 0; s < plan.n_steps; ++s) {
    const double t0 = t_start + s * plan.h;
    double g = integrated_gamma(schedule, t0, t0 + plan.h) / plan.h;
    if (g * plan.h < 1e-14) g = 0.0;
    gammas[s] = g;
  }
  if (options.low_rank) {
    int s = 0;
    while (s < plan.n_steps) {
      if (gammas[s] != 0.0) {
        ++s;
        continue;
      }
      int e = s;
      while (e < plan.n_steps && gammas[e] == 0.0) ++e;
      if (e - s >= options.low_rank_min_steps)
        for (int k = s; k < e; ++k) factored[k] = true;
      s = e;
    }
  }

  EvolveResult result;
  std::optional<FactorState> factors;
  std::optional<detail::ColumnPropagator> columns;

  auto current_trace = [&] { return factors ? factors->trace() : trace(state); };
  auto record = [&](double t) {
    ObserverRecord r;
    r.time = t;
    r.gamma = gamma_at(schedule, t);
    if (factors) {
      std::tie(r.pop1, r.pop2) = factors->populations();
      if (!observers.empty()) {
        const DensityState snapshot = detail::materialize(*factors, t);
        for (const auto& o : observers) o(snapshot, result.ledger);
      }
    } else {
      std::tie(r.pop1, r.pop2) = electronic_populations(state);
      check_populations(std::min(state.rho11.diagonal().real().minCoeff(),
                                 state.rho22.diagonal().real().minCoeff()),
                        t, options);
      for (const auto& o : observers) o(state, result.ledger);
    }
    r.trace = r.pop1 + r.pop2;
    r.absorbed_cis = result.ledger.absorbed_cis;
    r.absorbed_trans = result.ledger.absorbed_trans;
    result.records.push_back(r);
  };

  record(t_start);
  double tr_prev = current_trace();
  bool kicked = false;
  double map_gamma = -1.0;
  Eigen::Matrix4cd map;
  Eigen::VectorXd unit_weights;

  for (int s = 0; s < plan.n_steps; ++s) {
    // Representation changes happen on synchronized states only.
    if (factored[s] && !factors) {
      factors = detail::factorize(state, options.rank_tolerance);
      const int rank = static_cast<int>(factors->weights.size());
      result.max_rank = std::max(result.max_rank, rank);
      columns.emplace(kernel, rank);
      state = DensityState{};
    } else if (!factored[s] && factors) {
      state = detail::materialize(*factors, t_start + s * plan.h);
      factors.reset();
      columns.reset();
    }

    SinkRates rates;
    if (factors) {
      if (!kicked) columns->kinetic(factors->vectors, true);
      rates = columns->pointwise(factors->vectors, factors->weights);
    } else {
      if (!kicked) dense.kinetic(state, true);
      if (gammas[s] != map_gamma) {
        map = kernel.coupling_map(gammas[s]);
        map_gamma = gammas[s];
      }
      rates = dense.pointwise(state, map);
    }

    const double t1 = t_start + (s + 1) * plan.h;
    const double tr = current_trace();
    const double loss = tr_prev - tr;
    if (-loss > options.max_trace_growth)
      fail(ErrorKind::step_instability,
           fmt::format("trace grew by {:.3e} in the step ending at t = {:.3f} fs", -loss, t1));
    book_loss(result.ledger, t1, loss, rates);
    tr_prev = tr;

    const bool last = s + 1 == plan.n_steps;
    const bool record_due = last || (s + 1) % plan.record_every == 0;
    const bool switching = !last && factored[s + 1] != factored[s];
    const bool sync = record_due || switching;
    if (factors) {
      columns->kinetic(factors->vectors, sync);
    } else {
      dense.kinetic(state, sync);
    }
    kicked = !sync;
    if (sync) state.time = t1;
    if (record_due) record(t1);
  }

  if (factors) state = detail::materialize(*factors, options.t_final);
  state.time = options.t_final;
  result.state = std::move(state);
  (void)n;
  return result;
}

EvolveResult evolve_rk4(DensityState state, const Hamiltonian& h, std::span<const Sink> sinks,
                        const PulseSchedule& schedule, const EvolveOptions& options,
                        std::span<const Observer> observers) {
  const double t_start = state.time;
  const StepPlan plan = plan_steps(t_start, options);
  const int n = h.n_points();

  Eigen::ArrayXd w_cis1 = Eigen::ArrayXd::Zero(n), w_cis2 = w_cis1, w_tr1 = w_cis1, w_tr2 = w_cis1;
  for (const auto& s : sinks) {
    auto& target = s.label == SinkLabel::cis ? (s.surface == 1 ? w_cis1 : w_cis2)
                                             : (s.surface == 1 ? w_tr1 : w_tr2);
    target += s.profile;
  }
  // Absorption rates 2 tr(W_k rho) integrated alongside rho.
  auto rates = [&](const DensityState& r) {
    const Eigen::ArrayXd d1 = r.rho11.diagonal().real().array();
    const Eigen::ArrayXd d2 = r.rho22.diagonal().real().array();
    return Eigen::Vector2d(2.0 * ((w_cis1 * d1).sum() + (w_cis2 * d2).sum()),
                           2.0 * ((w_tr1 * d1).sum() + (w_tr2 * d2).sum()));
  };
  auto axpy = [](const DensityState& a, double c, const DensityState& b) {
    DensityState r = a;
    r.rho11 += c * b.rho11;
    r.rho12 += c * b.rho12;
    r.rho21 += c * b.rho21;
    r.rho22 += c * b.rho22;
    return r;
  };

  EvolveResult result;
  auto record = [&](double t) {
    ObserverRecord r;
    r.time = t;
    r.gamma = gamma_at(schedule, t);
    std::tie(r.pop1, r.pop2) = electronic_populations(state);
    r.trace = r.pop1 + r.pop2;
    r.absorbed_cis = result.ledger.absorbed_cis;
    r.absorbed_trans = result.ledger.absorbed_trans;
    check_populations(std::min(state.rho11.diagonal().real().minCoeff(),
                               state.rho22.diagonal().real().minCoeff()),
                      t, options);
    for (const auto& o : observers) o(state, result.ledger);
    result.records.push_back(r);
  };

  record(t_start);
  const double hstep = plan.h;
  for (int s = 0; s < plan.n_steps; ++s) {
    const double t0 = t_start + s * hstep;
    const double tr0 = trace(state);
    const DensityState k1 = lindblad_rhs(state, h, sinks, gamma_at(schedule, t0));
    const Eigen::Vector2d a1 = rates(state);
    const DensityState s2 = axpy(state, 0.5 * hstep, k1);
    const DensityState k2 = lindblad_rhs(s2, h, sinks, gamma_at(schedule, t0 + 0.5 * hstep));
    const Eigen::Vector2d a2 = rates(s2);
    const DensityState s3 = axpy(state, 0.5 * hstep, k2);
    const DensityState k3 = lindblad_rhs(s3, h, sinks, gamma_at(schedule, t0 + 0.5 * hstep));
    const Eigen::Vector2d a3 = rates(s3);
    const DensityState s4 = axpy(state, hstep, k3);
    const DensityState k4 = lindblad_rhs(s4, h, sinks, gamma_at(schedule, t0 + hstep));
    const Eigen::Vector2d a4 = rates(s4);

    const double c = hstep / 6.0;
    state = axpy(state, c, k1);
    state = axpy(state, 2.0 * c, k2);
    state = axpy(state, 2.0 * c, k3);
    state = axpy(state, c, k4);
    const Eigen::MatrixXcd full = state.full();
    state = DensityState::from_full(0.5 * (full + full.adjoint()), t0 + hstep);

    const double tr1 = trace(state);
    if (tr1 - tr0 > options.max_trace_growth)
      fail(ErrorKind::step_instability,
           fmt::format("trace grew by {:.3e} at t = {:.3f} fs", tr1 - tr0, t0 + hstep));
    const Eigen::Vector2d absorbed = c * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    result.ledger.book(t0 + hstep, absorbed[0], absorbed[1]);

    if (s + 1 == plan.n_steps || (s + 1) % plan.record_every == 0) record(t0 + hstep);
  }
  state.time = options.t_final;
  result.state = std::move(state);
  return result;
}

}  // namespace

EvolveResult evolve(DensityState state, const Hamiltonian& h, std::span<const Sink> sinks,
                    const PulseSchedule& schedule, const EvolveOptions& options,
                    std::span<const Observer> observers) {
  schedule.validate();
  if (schedule.end_time() > options.t_final + 1e-9)
    fail(ErrorKind::schedule_out_of_range,
         fmt::format("schedule runs until {} fs, past t_final = {} fs", schedule.end_time(),
                     options.t_final));
  if (state.n_points() != h.n_points())
    fail(ErrorKind::invalid_argument, "state and Hamiltonian grids differ");
  if (options.integrator == Integrator::rk4)
    return evolve_rk4(std::move(state), h, sinks, schedule, options, observers);
  return evolve_split(std::move(state), h, sinks, schedule, options, observers);
}

}  // namespace retinal
