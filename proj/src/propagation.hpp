#pragma once

// Split-step building blocks shared by the dense propagator, the low-rank
// path, the trajectory unraveling and the sink reflection check.
//
// One step of length h is the symmetric product
//
//   T(h/2) P(h) T(h/2),   P(h) = V(h/2) L(h) V(h/2)
//
// where T is the kinetic factor (block diagonal, exact in momentum space),
// V the diagonal potentials with the absorbers, and L the electronic
// coupling together with the dephasing. Dephasing commutes with T and V, so
// the only splitting error is the usual kinetic/potential one and large
// measurement rates stay stable. Consecutive half kicks are merged by the
// callers.

#include "retinal/lindblad.hpp"
#include "retinal/model.hpp"
#include "retinal/sinks.hpp"
#include "retinal/spectral.hpp"

#include <Eigen/Dense>

#include <span>

namespace retinal::detail {

struct SinkRates {
  double cis = 0.0;
  double trans = 0.0;
};

class SplitStepKernel {
 public:
  SplitStepKernel(const Hamiltonian& h, std::span<const Sink> sinks, double dt);

  int n_points() const { return n_; }
  double dt() const { return dt_; }

  /// exp(-i (v_s - i W_s) dt / 2) for surface s = 1, 2.
  const Eigen::ArrayXcd& half_potential(int surface) const { return surface == 1 ? half1_ : half2_; }
  /// exp(-i T dt) or exp(-i T dt / 2), divided by n for the FFT round trip.
  const Eigen::ArrayXcd& kinetic_phase(bool half) const { return half ? kin_half_ : kin_full_; }
  /// Absorber of sink `label` acting on `surface` (zero if none).
  const Eigen::ArrayXd& absorber(SinkLabel label, int surface) const;

  /// exp(-i alpha sigma_x dt).
  const Eigen::Matrix2cd& coupling_unitary() const { return coupling_; }
  /// exp(dt (-i[alpha sigma_x, .] - gamma D)) on vec(rho11, rho12, rho21, rho22).
  Eigen::Matrix4cd coupling_map(double gamma) const;

 private:
  int n_;
  double dt_;
  double alpha_;
  Eigen::ArrayXcd half1_, half2_, kin_full_, kin_half_;
  Eigen::ArrayXd absorbers_[2][2];
  Eigen::Matrix2cd coupling_;
};

/// Columns of a 2n x m matrix, each one wavefunction (surface 1 on top).
class ColumnPropagator {
 public:
  ColumnPropagator(const SplitStepKernel& kernel, int columns);

  void kinetic(Eigen::Ref<Eigen::MatrixXcd> states, bool half) const;
  /// Applies P(h); returns weight-averaged tr(W_k rho) before the factor.
  SinkRates pointwise(Eigen::Ref<Eigen::MatrixXcd> states, const Eigen::VectorXd& weights) const;

 private:
  const SplitStepKernel* kernel_;
  int columns_;
  BatchedFft forward_;
  BatchedFft backward_;
};

class DensePropagator {
 public:
  explicit DensePropagator(const SplitStepKernel& kernel);

  /// K rho K^dag on every block; leaves rho21 = rho12^dag and the diagonal
  /// blocks exactly Hermitian.
  void kinetic(DensityState& state, bool half) const;
  SinkRates pointwise(DensityState& state, const Eigen::Matrix4cd& map) const;

 private:
  void kinetic_block(Eigen::MatrixXcd& block, const Eigen::ArrayXcd& phase) const;

  const SplitStepKernel* kernel_;
  BatchedFft forward_, backward_;
  mutable Eigen::MatrixXcd packed_;
};

/// rho = sum_j w_j |v_j><v_j|.
struct FactorState {
  Eigen::MatrixXcd vectors;
  Eigen::VectorXd weights;

  double trace() const;
  std::pair<double, double> populations() const;
};

/// Eigen-decomposes rho and keeps the eigenpairs whose dropped sum stays
/// below `tolerance`.
FactorState factorize(const DensityState& state, double tolerance);
DensityState materialize(const FactorState& factors, double time);

}  // namespace retinal::detail
