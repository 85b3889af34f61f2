#pragma once

// Two coupled harmonic surfaces along the isomerization coordinate.
//
// Units throughout: hbar = 1, time in fs, energies as angular frequencies
// (fs^-1), x dimensionless. The mass only rescales x and defaults to 1.

#include <Eigen/Dense>

#include <limits>
#include <numbers>

namespace retinal {

/// Amplitudes on the grid, surface |1> in the first n entries and |2> in the
/// last n. Entries are grid-normalized: psi.squaredNorm() is the probability.
using Wavefunction = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 299.792458;  // nm / fs

/// E / hbar for a photon of the given wavelength, in fs^-1.
constexpr double photon_frequency(double wavelength_nm) {
  return 2.0 * std::numbers::pi * kSpeedOfLight / wavelength_nm;
}

/// delta = kDeltaCoefficient * alpha^2 with alpha in fs^-1.
inline constexpr double kDeltaCoefficient = 11.5;  // fs^2

struct ModelParams {
  double omega1 = 2.0 * std::numbers::pi / 300.0;  // cis (ground) surface
  double omega2 = 2.0 * std::numbers::pi / 600.0;  // excited surface
  double alpha = 0.1;
  double e_in = photon_frequency(500.0);
  double delta_e = 0.6 * photon_frequency(500.0);
  // Unset until calibrate_offset (or an explicit value) provides it.
  double delta_x = std::numeric_limits<double>::quiet_NaN();
  double mass = 1.0;

  /// Throws SimulationError(invalid_argument) when an invariant is broken.
  void validate() const;

  /// Position width of the initial packet, sqrt(1 / (2 m omega1)).
  double sigma0() const;
  /// Width of the vibrational ground state on the excited surface.
  double sigma_trans() const;

  double v1(double x) const { return 0.5 * mass * omega1 * omega1 * x * x; }
  double v2(double x) const {
    const double d = x - delta_x;
    return delta_e + 0.5 * mass * omega2 * omega2 * d * d;
  }

  bool operator==(const ModelParams&) const = default;
};

/// Default parameters with delta_x calibrated to delta = 11.5 alpha^2.
ModelParams default_params();

struct Grid {
  int n_points = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd x;  // x_min + i dx, i < n_points (periodic, x_max excluded)
  Eigen::ArrayXd k;  // FFT ordering: 0, dk, ..., -dk

  double length() const { return x_max - x_min; }
  double k_max() const;
};

/// Absolute padding added on both sides of the coverage interval.
inline constexpr double kDefaultPadding = 60.0;
inline constexpr int kDefaultPoints = 512;

/// Uniform periodic grid covering [-4 sigma0, delta_x + 4 sigma_trans]
/// extended by `padding` on both sides.
///
/// Throws invalid_argument for a non power of two, n < 64 or negative
/// padding, and domain_too_small when the spacing cannot resolve the
/// momentum content of the initial packet.
Grid build_grid(const ModelParams& params, int n_points, double padding = kDefaultPadding);

struct Hamiltonian {
  Eigen::ArrayXd kinetic;  // k^2 / 2m on the FFT lattice
  Eigen::ArrayXd v1;
  Eigen::ArrayXd v2;
  double coupling = 0.0;  // alpha (hbar = 1)
  double mass = 1.0;

  int n_points() const { return static_cast<int>(v1.size()); }
};

Hamiltonian build_hamiltonian(const ModelParams& params, const Grid& grid);

/// H psi with the kinetic term applied spectrally.
Wavefunction apply(const Hamiltonian& h, const Wavefunction& psi);

/// <psi|H|psi> / <psi|psi>.
double energy(const Hamiltonian& h, const Wavefunction& psi);

/// Explicit (2n x 2n) matrix of H. Meant for small grids and tests.
Eigen::MatrixXcd dense_matrix(const Hamiltonian& h);

/// Ground vibrational state of the cis well placed on surface |2>.
/// Throws normalization_failure if the grid clips the packet.
Wavefunction initial_state(const ModelParams& params, const Grid& grid);

struct CrossingInfo {
  double x_c = 0.0;
  double v_c = 0.0;
  double slope_diff = 0.0;
  double delta = 0.0;
  double arrival_time = 0.0;
};

/// Diabatic crossing v1 = v2 first met travelling from 0 towards delta_x,
/// with the Landau-Zener parameter of a classical particle released at rest
/// at x = 0 on surface 2. Throws no_crossing.
CrossingInfo locate_crossing(const ModelParams& params);

/// Search interval of calibrate_offset, in units of the smallest offset at
/// which the surfaces still cross inside (0, delta_x).
inline constexpr double kCalibrationBracketMax = 20.0;

/// Solves locate_crossing(p).delta == target_delta for delta_x.
/// Throws calibration_failure when the bracket holds no root.
ModelParams calibrate_offset(ModelParams params, double target_delta);

/// Largest coherent frequency right after the excitation.
double rabi_frequency(const ModelParams& params);

}  // namespace retinal
