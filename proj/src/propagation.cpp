#include "propagation.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <complex>

namespace retinal::detail {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

SplitStepKernel::SplitStepKernel(const Hamiltonian& h, std::span<const Sink> sinks, double dt)
    : n_(h.n_points()), dt_(dt), alpha_(h.coupling) {
  for (auto& by_label : absorbers_)
    for (auto& a : by_label) a = Eigen::ArrayXd::Zero(n_);
  for (const auto& s : sinks) {
    const int label = s.label == SinkLabel::cis ? 0 : 1;
    absorbers_[label][s.surface - 1] += s.profile;
  }
  const Eigen::ArrayXd w1 = absorbers_[0][0] + absorbers_[1][0];
  const Eigen::ArrayXd w2 = absorbers_[0][1] + absorbers_[1][1];

  half1_ = (-kI * 0.5 * dt * h.v1.cast<cd>() - 0.5 * dt * w1.cast<cd>()).exp();
  half2_ = (-kI * 0.5 * dt * h.v2.cast<cd>() - 0.5 * dt * w2.cast<cd>()).exp();
  kin_full_ = (-kI * dt * h.kinetic.cast<cd>()).exp() / static_cast<double>(n_);
  kin_half_ = (-kI * 0.5 * dt * h.kinetic.cast<cd>()).exp() / static_cast<double>(n_);

  const double c = std::cos(alpha_ * dt);
  const double s = std::sin(alpha_ * dt);
  coupling_ << c, -kI * s, -kI * s, c;
}

const Eigen::ArrayXd& SplitStepKernel::absorber(SinkLabel label, int surface) const {
  return absorbers_[label == SinkLabel::cis ? 0 : 1][surface - 1];
}

Eigen::Matrix4cd SplitStepKernel::coupling_map(double gamma) const {
  // Index of block (a, b) in vec order 11, 12, 21, 22.
  auto idx = [](int a, int b) { return 2 * a + b; };
  Eigen::Matrix4cd g = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const int i = idx(a, b);
      g(i, idx(1 - a, b)) += -kI * alpha_;  // -i (C rho)
      g(i, idx(a, 1 - b)) += kI * alpha_;   // +i (rho C)
      if (a != b) g(i, i) -= gamma;
    }
  }
  return (g * dt_).exp();
}

ColumnPropagator::ColumnPropagator(const SplitStepKernel& kernel, int columns)
    : kernel_(&kernel),
      columns_(columns),
      forward_(BatchedFft::columns(kernel.n_points(), 2 * columns, FftDirection::forward)),
      backward_(BatchedFft::columns(kernel.n_points(), 2 * columns, FftDirection::backward)) {}

void ColumnPropagator::kinetic(Eigen::Ref<Eigen::MatrixXcd> states, bool half) const {
  const int n = kernel_->n_points();
  const auto& phase = kernel_->kinetic_phase(half);
  forward_.execute(states.data());
  Eigen::Map<Eigen::MatrixXcd> halves(states.data(), n, 2 * columns_);
  halves.array().colwise() *= phase;
  backward_.execute(states.data());
}

SinkRates ColumnPropagator::pointwise(Eigen::Ref<Eigen::MatrixXcd> states,
                                      const Eigen::VectorXd& weights) const {
  const int n = kernel_->n_points();
  const auto& e1 = kernel_->half_potential(1);
  const auto& e2 = kernel_->half_potential(2);
  const auto& u = kernel_->coupling_unitary();
  const auto& wc1 = kernel_->absorber(SinkLabel::cis, 1);
  const auto& wc2 = kernel_->absorber(SinkLabel::cis, 2);
  const auto& wt1 = kernel_->absorber(SinkLabel::trans, 1);
  const auto& wt2 = kernel_->absorber(SinkLabel::trans, 2);

  SinkRates rates;
  Eigen::ArrayXcd a(n), b(n);
  for (int j = 0; j < columns_; ++j) {
    auto top = states.col(j).head(n).array();
    auto bottom = states.col(j).tail(n).array();
    const Eigen::ArrayXd p1 = top.abs2();
    const Eigen::ArrayXd p2 = bottom.abs2();
    rates.cis += weights[j] * ((wc1 * p1).sum() + (wc2 * p2).sum());
    rates.trans += weights[j] * ((wt1 * p1).sum() + (wt2 * p2).sum());

    a = top * e1;
    b = bottom * e2;
    top = (u(0, 0) * a + u(0, 1) * b) * e1;
    bottom = (u(1, 0) * a + u(1, 1) * b) * e2;
  }
  return rates;
}

DensePropagator::DensePropagator(const SplitStepKernel& kernel)
    : kernel_(&kernel),
      forward_(BatchedFft::square(kernel.n_points(), FftDirection::forward)),
      backward_(BatchedFft::square(kernel.n_points(), FftDirection::backward)) {}

void DensePropagator::kinetic_block(Eigen::MatrixXcd& block, const Eigen::ArrayXcd& phase) const {
  // K B K^dag = F^-1 P F B F^-1 P^* F along columns and rows. The row factor
  // is the column one with k -> -k, and the phase is even in k, so both
  // collapse into one 2-D transform pair. The 1/n of each round trip sits in
  // `phase`.
  forward_.execute(block.data());
  const int n = kernel_->n_points();
  for (int j = 0; j < n; ++j) block.col(j).array() *= phase * std::conj(phase[j]);
  backward_.execute(block.data());
}

void DensePropagator::kinetic(DensityState& state, bool half) const {
  // The diagonal blocks are Hermitian, so one transform of A = rho11 + i rho22
  // carries both: K A K^dag = H1 + i H2 with H1, H2 Hermitian.
  const auto& phase = kernel_->kinetic_phase(half);
  packed_ = state.rho11 + kI * state.rho22;
  kinetic_block(packed_, phase);
  kinetic_block(state.rho12, phase);
  state.rho21 = state.rho12.adjoint();
  state.rho11 = packed_.adjoint();
  state.rho22 = kI * (state.rho11 - packed_) * 0.5;
  state.rho11 = (state.rho11 + packed_) * 0.5;
}

SinkRates DensePropagator::pointwise(DensityState& state, const Eigen::Matrix4cd& m) const {
  const int n = kernel_->n_points();
  const auto& e1 = kernel_->half_potential(1);
  const auto& e2 = kernel_->half_potential(2);

  SinkRates rates;
  const Eigen::ArrayXd d1 = state.rho11.diagonal().real().array();
  const Eigen::ArrayXd d2 = state.rho22.diagonal().real().array();
  rates.cis = (kernel_->absorber(SinkLabel::cis, 1) * d1).sum() +
              (kernel_->absorber(SinkLabel::cis, 2) * d2).sum();
  rates.trans = (kernel_->absorber(SinkLabel::trans, 1) * d1).sum() +
                (kernel_->absorber(SinkLabel::trans, 2) * d2).sum();

  Eigen::ArrayXcd p11(n), p12(n), p21(n), p22(n), a11(n), a12(n), a21(n), a22(n);
  for (int j = 0; j < n; ++j) {
    // Phase of block (a, b) at (i, j) is e_a(i) conj(e_b(j)).
    p11 = e1 * std::conj(e1[j]);
    p12 = e1 * std::conj(e2[j]);
    p21 = e2 * std::conj(e1[j]);
    p22 = e2 * std::conj(e2[j]);
    a11 = state.rho11.col(j).array() * p11;
    a12 = state.rho12.col(j).array() * p12;
    a21 = state.rho21.col(j).array() * p21;
    a22 = state.rho22.col(j).array() * p22;
    state.rho11.col(j).array() = (m(0, 0) * a11 + m(0, 1) * a12 + m(0, 2) * a21 + m(0, 3) * a22) * p11;
    state.rho12.col(j).array() = (m(1, 0) * a11 + m(1, 1) * a12 + m(1, 2) * a21 + m(1, 3) * a22) * p12;
    state.rho21.col(j).array() = (m(2, 0) * a11 + m(2, 1) * a12 + m(2, 2) * a21 + m(2, 3) * a22) * p21;
    state.rho22.col(j).array() = (m(3, 0) * a11 + m(3, 1) * a12 + m(3, 2) * a21 + m(3, 3) * a22) * p22;
  }
  return rates;
}

double FactorState::trace() const {
  return (vectors.colwise().squaredNorm().transpose().array() * weights.array()).sum();
}

std::pair<double, double> FactorState::populations() const {
  const auto n = vectors.rows() / 2;
  const double p1 =
      (vectors.topRows(n).colwise().squaredNorm().transpose().array() * weights.array()).sum();
  const double p2 =
      (vectors.bottomRows(n).colwise().squaredNorm().transpose().array() * weights.array()).sum();
  return {p1, p2};
}

FactorState factorize(const DensityState& state, double tolerance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(state.full());
  const auto& values = solver.eigenvalues();  // ascending
  Eigen::Index first = 0;
  double dropped = 0.0;
  while (first < values.size() && (values[first] <= 0.0 || dropped + values[first] <= tolerance)) {
    if (values[first] > 0.0) dropped += values[first];
    ++first;
  }
  FactorState f;
  const Eigen::Index rank = values.size() - first;
  f.vectors = solver.eigenvectors().rightCols(rank);
  f.weights = values.tail(rank);
  return f;
}

DensityState materialize(const FactorState& factors, double time) {
  const Eigen::MatrixXcd scaled = factors.vectors * factors.weights.cast<cd>().asDiagonal();
  return DensityState::from_full(scaled * factors.vectors.adjoint(), time);
}

}  // namespace retinal::detail
