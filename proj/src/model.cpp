#include "retinal/model.hpp"

#include "retinal/error.hpp"
#include "retinal/spectral.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <fmt/format.h>
#include <optional>

namespace retinal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::domain_too_small: return "domain-too-small";
    case ErrorKind::normalization_failure: return "normalization-failure";
    case ErrorKind::no_crossing: return "no-crossing";
    case ErrorKind::calibration_failure: return "calibration-failure";
    case ErrorKind::step_instability: return "step-instability";
    case ErrorKind::schedule_out_of_range: return "schedule-out-of-range";
    case ErrorKind::step_too_large: return "step-too-large";
    case ErrorKind::invalid_n: return "invalid-n";
    case ErrorKind::io_error: return "io-error";
    case ErrorKind::config_error: return "config-error";
  }
  return "unknown";
}

void ModelParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::invalid_argument, what);
  };
  require(omega1 > 0.0, "omega1 must be positive");
  require(omega2 > 0.0, "omega2 must be positive");
  require(alpha >= 0.0, "alpha must be non-negative");
  require(delta_e >= 0.0, "delta_e must be non-negative");
  require(delta_x > 0.0, "delta_x must be positive (calibrate it first)");
  require(mass > 0.0, "mass must be positive");
}

double ModelParams::sigma0() const { return std::sqrt(1.0 / (2.0 * mass * omega1)); }
double ModelParams::sigma_trans() const { return std::sqrt(1.0 / (2.0 * mass * omega2)); }

ModelParams default_params() {
  const ModelParams p;
  return calibrate_offset(p, kDeltaCoefficient * p.alpha * p.alpha);
}

double Grid::k_max() const { return std::numbers::pi / dx; }

Grid build_grid(const ModelParams& params, int n_points, double padding) {
  params.validate();
  if (n_points < 64 || (n_points & (n_points - 1)) != 0)
    fail(ErrorKind::invalid_argument, fmt::format("n_points = {} is not a power of two >= 64", n_points));
  if (!(padding >= 0.0)) fail(ErrorKind::invalid_argument, "padding must be non-negative");

  Grid g;
  g.n_points = n_points;
  g.x_min = -4.0 * params.sigma0() - padding;
  g.x_max = params.delta_x + 4.0 * params.sigma_trans() + padding;
  g.dx = g.length() / n_points;

  // The initial packet has momentum spread 1 / (2 sigma0); require eight of
  // those inside the Nyquist band.
  const double k_needed = 4.0 / params.sigma0();
  if (g.k_max() < k_needed)
    fail(ErrorKind::domain_too_small,
         fmt::format("k_max = {:.4g} < {:.4g}: {} points cannot resolve a domain of length {:.4g}",
                     g.k_max(), k_needed, n_points, g.length()));

  g.x = g.x_min + g.dx * Eigen::ArrayXd::LinSpaced(n_points, 0.0, n_points - 1.0);
  const double dk = 2.0 * std::numbers::pi / g.length();
  g.k.resize(n_points);
  for (int i = 0; i < n_points; ++i) g.k[i] = dk * (i < n_points / 2 ? i : i - n_points);
  return g;
}

Hamiltonian build_hamiltonian(const ModelParams& params, const Grid& grid) {
  params.validate();
  Hamiltonian h;
  h.mass = params.mass;
  h.coupling = params.alpha;
  h.kinetic = grid.k.square() / (2.0 * params.mass);
  h.v1 = grid.x.unaryExpr([&](double x) { return params.v1(x); });
  h.v2 = grid.x.unaryExpr([&](double x) { return params.v2(x); });
  return h;
}

Wavefunction apply(const Hamiltonian& h, const Wavefunction& psi) {
  const int n = h.n_points();
  Wavefunction k_part = psi;
  BatchedFft::columns(n, 2, FftDirection::forward).execute(k_part.data());
  k_part.head(n).array() *= h.kinetic / n;
  k_part.tail(n).array() *= h.kinetic / n;
  BatchedFft::columns(n, 2, FftDirection::backward).execute(k_part.data());

  Wavefunction out(2 * n);
  out.head(n) = k_part.head(n).array() + h.v1 * psi.head(n).array() + h.coupling * psi.tail(n).array();
  out.tail(n) = k_part.tail(n).array() + h.v2 * psi.tail(n).array() + h.coupling * psi.head(n).array();
  return out;
}

double energy(const Hamiltonian& h, const Wavefunction& psi) {
  return psi.dot(apply(h, psi)).real() / psi.squaredNorm();
}

Eigen::MatrixXcd dense_matrix(const Hamiltonian& h) {
  const int n = h.n_points();
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Identity(n, n);
  BatchedFft::columns(n, n, FftDirection::forward).execute(t.data());
  for (int j = 0; j < n; ++j) t.col(j).array() *= h.kinetic / n;
  BatchedFft::columns(n, n, FftDirection::backward).execute(t.data());

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = t;
  m.bottomRightCorner(n, n) = t;
  m.topLeftCorner(n, n).diagonal().array() += h.v1;
  m.bottomRightCorner(n, n).diagonal().array() += h.v2;
  m.topRightCorner(n, n).diagonal().setConstant(h.coupling);
  m.bottomLeftCorner(n, n).diagonal().setConstant(h.coupling);
  return m;
}

Wavefunction initial_state(const ModelParams& params, const Grid& grid) {
  params.validate();
  const int n = grid.n_points;
  const double a = params.mass * params.omega1;
  Wavefunction psi = Wavefunction::Zero(2 * n);
  psi.tail(n) = (std::pow(a / std::numbers::pi, 0.25) * std::sqrt(grid.dx) *
                 (-0.5 * a * grid.x.square()).exp())
                    .cast<std::complex<double>>()
                    .matrix();
  const double norm = psi.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-10)
    fail(ErrorKind::normalization_failure,
         fmt::format("grid clips the initial packet: norm = {:.12f}", norm));
  psi /= std::sqrt(norm);
  return psi;
}

namespace {

// Smallest root of v1 - v2 in (0, delta_x].
std::optional<double> diabatic_crossing(const ModelParams& p) {
  const double a = 0.5 * p.mass * (p.omega1 * p.omega1 - p.omega2 * p.omega2);
  const double b = p.mass * p.omega2 * p.omega2 * p.delta_x;
  const double c = -p.delta_e - 0.5 * p.mass * p.omega2 * p.omega2 * p.delta_x * p.delta_x;
  std::optional<double> best;
  auto consider = [&](double x) {
    if (x > 0.0 && x <= p.delta_x * (1.0 + 1e-12) && (!best || x < *best)) best = x;
  };
  if (std::abs(a) < 1e-14 * std::abs(b)) {
    consider(-c / b);
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    // Cancellation-free pair of roots.
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    consider(q / a);
    if (q != 0.0) consider(c / q);
  }
  return best;
}

}  // namespace

CrossingInfo locate_crossing(const ModelParams& params) {
  params.validate();
  const auto xc = diabatic_crossing(params);
  if (!xc)
    fail(ErrorKind::no_crossing,
         fmt::format("surfaces do not cross in (0, {:.6g})", params.delta_x));

  CrossingInfo info;
  info.x_c = *xc;
  const double kinetic = params.v2(0.0) - params.v2(info.x_c);
  info.v_c = std::sqrt(2.0 * std::max(kinetic, 0.0) / params.mass);
  info.slope_diff = std::abs(params.mass * params.omega1 * params.omega1 * info.x_c -
                             params.mass * params.omega2 * params.omega2 * (info.x_c - params.delta_x));
  info.delta = params.alpha * params.alpha / (info.v_c * info.slope_diff);
  // x(t) = delta_x (1 - cos omega2 t) on the excited surface.
  info.arrival_time =
      std::acos(std::clamp(1.0 - info.x_c / params.delta_x, -1.0, 1.0)) / params.omega2;
  return info;
}

ModelParams calibrate_offset(ModelParams params, double target_delta) {
  if (!(target_delta > 0.0)) fail(ErrorKind::invalid_argument, "target_delta must be positive");

  // Below lo the cis surface never rises above the excited minimum inside
  // (0, delta_x), so no crossing exists.
  const double threshold = std::sqrt(2.0 * params.delta_e / params.mass) / params.omega1;
  const double lo = threshold > 0.0 ? threshold * (1.0 + 1e-9) : 1e-3 * params.sigma0();
  const double hi = kCalibrationBracketMax * std::max(threshold, params.sigma0());

  auto residual = [&](double dx) {
    ModelParams p = params;
    p.delta_x = dx;
    return locate_crossing(p).delta - target_delta;
  };
  const double f_lo = residual(lo);
  const double f_hi = residual(hi);
  if (f_lo * f_hi > 0.0)
    fail(ErrorKind::calibration_failure,
         fmt::format("no root for delta = {:.6g} in delta_x in [{:.6g}, {:.6g}]: "
                     "delta = {:.6g} and {:.6g} at the ends",
                     target_delta, lo, hi, f_lo + target_delta, f_hi + target_delta));

  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      residual, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(50), max_iter);
  params.delta_x = 0.5 * (a + b);
  return params;
}

double rabi_frequency(const ModelParams& params) {
  return std::sqrt(params.e_in * params.e_in + params.alpha * params.alpha);
}

}  // namespace retinal
