#pragma once

#include "retinal/lindblad.hpp"
#include "retinal/model.hpp"

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <random>

namespace retinal::test {

using cd = std::complex<double>;

/// Kinetic matrix from the plane-wave sum, independent of the FFT path:
/// T_ij = (1/n) sum_k exp(i k (x_i - x_j)) k^2 / 2m.
inline Eigen::MatrixXcd kinetic_oracle(const Grid& grid, double mass) {
  const int n = grid.n_points;
  Eigen::MatrixXcd t(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cd s = 0.0;
      for (int m = 0; m < n; ++m) {
        const double k = grid.k[m];
        s += std::exp(cd(0.0, k * (grid.x[i] - grid.x[j]))) * (k * k / (2.0 * mass));
      }
      t(i, j) = s / static_cast<double>(n);
    }
  return t;
}

inline Eigen::MatrixXcd hamiltonian_oracle(const ModelParams& p, const Grid& grid) {
  const int n = grid.n_points;
  const Eigen::MatrixXcd t = kinetic_oracle(grid, p.mass);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  h.topLeftCorner(n, n) = t;
  h.bottomRightCorner(n, n) = t;
  for (int i = 0; i < n; ++i) {
    h(i, i) += p.v1(grid.x[i]);
    h(n + i, n + i) += p.v2(grid.x[i]);
    h(i, n + i) = p.alpha;
    h(n + i, i) = p.alpha;
  }
  return h;
}

inline Eigen::VectorXcd random_vector(int size, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(size);
  for (auto& z : v) z = cd(g(rng), g(rng));
  return v;
}

/// Random density matrix of the given rank, unit trace.
inline Eigen::MatrixXcd random_density(int size, int rank, std::mt19937_64& rng) {
  Eigen::MatrixXcd a(size, rank);
  for (int j = 0; j < rank; ++j) a.col(j) = random_vector(size, rng);
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace().real();
}

/// Gaussian packet on one surface, grid-normalized.
inline Wavefunction packet(const Grid& grid, int surface, double x0, double k0, double sigma) {
  const int n = grid.n_points;
  Wavefunction psi = Wavefunction::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    const double d = grid.x[i] - x0;
    psi[(surface - 1) * n + i] = std::exp(-d * d / (4 * sigma * sigma)) * std::exp(cd(0.0, k0 * d));
  }
  return psi / psi.norm();
}

}  // namespace retinal::test
