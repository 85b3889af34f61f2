#include "retinal/error.hpp"
#include "retinal/model.hpp"
#include "retinal/schedule.hpp"
#include "retinal/sinks.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace retinal;
using retinal::test::cd;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const SimulationError& e) {
    return e.kind();
  }
  FAIL("expected a SimulationError");
  return ErrorKind::invalid_argument;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("default parameters") {
    const ModelParams p;
    CHECK(p.omega1 == doctest::Approx(2 * std::numbers::pi / 300));
    CHECK(p.omega2 == doctest::Approx(2 * std::numbers::pi / 600));
    CHECK(p.alpha == 0.1);
    CHECK(p.e_in == doctest::Approx(3.7673).epsilon(1e-4));
    CHECK(p.delta_e == doctest::Approx(0.6 * p.e_in));
    CHECK(std::isnan(p.delta_x));
    CHECK(kind_of([&] { p.validate(); }) == ErrorKind::invalid_argument);

    ModelParams bad = default_params();
    bad.alpha = -0.1;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("grid construction") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 512, 2.0);
    CHECK(g.n_points == 512);
    CHECK(g.dx == doctest::Approx((g.x_max - g.x_min) / 512));
    CHECK(g.x_min <= -4 * p.sigma0());
    CHECK(g.x_max >= p.delta_x + 4 * p.sigma_trans());
    CHECK(g.x[0] == g.x_min);
    CHECK(g.x[511] == doctest::Approx(g.x_max - g.dx));

    const double dk = 2 * std::numbers::pi / g.length();
    CHECK(g.k[0] == 0.0);
    CHECK(g.k[1] == doctest::Approx(dk));
    CHECK(g.k[255] == doctest::Approx(255 * dk));
    CHECK(g.k[256] == doctest::Approx(-256 * dk));
    CHECK(g.k[511] == doctest::Approx(-dk));

    const Grid tight = build_grid(p, 512, 0.0);
    CHECK(tight.x_min == doctest::Approx(-4 * p.sigma0()));
    CHECK(tight.x_max == doctest::Approx(p.delta_x + 4 * p.sigma_trans()));

    CHECK(kind_of([&] { build_grid(p, 63, 2.0); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([&] { build_grid(p, 32, 2.0); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([&] { build_grid(p, 512, -1.0); }) == ErrorKind::invalid_argument);
    // 64 points over the padded domain cannot hold the packet's momenta.
    CHECK(kind_of([&] { build_grid(p, 64, kDefaultPadding); }) == ErrorKind::domain_too_small);
  }

  TEST_CASE("hamiltonian matches the plane-wave oracle") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 64, 0.0);
    const Hamiltonian h = build_hamiltonian(p, g);
    const Eigen::MatrixXcd oracle = test::hamiltonian_oracle(p, g);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const Wavefunction psi = test::random_vector(128, rng);
      CHECK((apply(h, psi) - oracle * psi).norm() < 1e-10 * (oracle * psi).norm());
    }
    CHECK((dense_matrix(h) - oracle).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("hamiltonian is hermitian") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 64, 0.0);
    const Hamiltonian h = build_hamiltonian(p, g);
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const Wavefunction phi = test::random_vector(128, rng);
      const Wavefunction psi = test::random_vector(128, rng);
      const cd a = phi.dot(apply(h, psi));
      const cd b = std::conj(psi.dot(apply(h, phi)));
      CHECK(std::abs(a - b) < 1e-12 * phi.norm() * psi.norm() * std::max(1.0, std::abs(a)));
    }
  }

  TEST_CASE("potential minima and the adiabatic gap") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 512);
    const Hamiltonian h = build_hamiltonian(p, g);
    CHECK(h.v1.minCoeff() >= 0.0);
    CHECK(h.v2.minCoeff() >= p.delta_e);
    CHECK(h.v2.minCoeff() == doctest::Approx(p.delta_e).epsilon(1e-3));
    CHECK(p.v1(0.0) == 0.0);
    CHECK(p.v2(p.delta_x) == doctest::Approx(2.2604).epsilon(1e-4));
    CHECK(h.v1[0] == doctest::Approx(p.v1(g.x[0])));
    CHECK(h.v2[100] == doctest::Approx(p.v2(g.x[100])));

    const CrossingInfo c = locate_crossing(p);
    Eigen::Matrix2d v;
    v << p.v1(c.x_c), p.alpha, p.alpha, p.v2(c.x_c);
    const Eigen::Vector2d e = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(v).eigenvalues();
    CHECK(e[1] - e[0] == doctest::Approx(2 * p.alpha).epsilon(1e-9));
  }

  TEST_CASE("initial state moments") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 512);
    const Wavefunction psi = initial_state(p, g);
    const int n = g.n_points;
    CHECK(psi.head(n).squaredNorm() == 0.0);
    CHECK(psi.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::ArrayXd w = psi.tail(n).array().abs2();
    CHECK(std::abs((w * g.x).sum()) < 1e-10);
    const double x2 = 1.0 / (2 * p.mass * p.omega1);
    CHECK((w * g.x.square()).sum() == doctest::Approx(x2).epsilon(1e-6));
  }

  TEST_CASE("initial energy two ways") {
    const ModelParams p = default_params();
    const Grid g = build_grid(p, 512);
    const Hamiltonian h = build_hamiltonian(p, g);
    const Wavefunction psi = initial_state(p, g);
    const int n = g.n_points;
    // Quadrature: potential on the grid plus kinetic from a direct DFT.
    const Eigen::VectorXcd phi = psi.tail(n);
    double kinetic = 0.0;
    for (int m = 0; m < n; ++m) {
      cd amp = 0.0;
      for (int i = 0; i < n; ++i) amp += std::exp(cd(0.0, -g.k[m] * g.x[i])) * phi[i];
      kinetic += std::norm(amp) / n * g.k[m] * g.k[m] / (2 * p.mass);
    }
    double potential = 0.0;
    for (int i = 0; i < n; ++i) potential += std::norm(phi[i]) * p.v2(g.x[i]);
    CHECK(energy(h, psi) == doctest::Approx(kinetic + potential).epsilon(1e-8));
    // Harmonic expectation of the displaced ground state as a sanity bound.
    const double analytic = p.delta_e + 0.5 * p.omega2 * p.omega2 * p.delta_x * p.delta_x +
                            p.omega1 / 4 * (1 + p.omega2 * p.omega2 / (p.omega1 * p.omega1));
    CHECK(energy(h, psi) == doctest::Approx(analytic).epsilon(1e-6));
  }

  TEST_CASE("clipped packet is rejected") {
    const ModelParams p = default_params();
    Grid g = build_grid(p, 512);
    g.x_min = 0.0;
    g.x = g.x_min + g.dx * Eigen::ArrayXd::LinSpaced(512, 0, 511);
    CHECK(kind_of([&] { initial_state(p, g); }) == ErrorKind::normalization_failure);
  }

  TEST_CASE("crossing of the symmetric toy model sits halfway") {
    ModelParams p;
    p.omega2 = p.omega1;
    p.delta_e = 0.0;
    p.delta_x = 50.0;
    CHECK(locate_crossing(p).x_c == doctest::Approx(25.0));
  }

  TEST_CASE("no crossing") {
    ModelParams p = default_params();
    p.delta_e = 100.0;
    CHECK(kind_of([&] { locate_crossing(p); }) == ErrorKind::no_crossing);
  }

  TEST_CASE("calibration") {
    const ModelParams p = default_params();
    const CrossingInfo c = locate_crossing(p);
    CHECK(std::abs(c.delta - 0.115) < 1e-6 * 0.115);
    CHECK(c.arrival_time > 85.0);
    CHECK(c.arrival_time < 135.0);
    // v_c from energy conservation on the excited surface.
    CHECK(0.5 * c.v_c * c.v_c == doctest::Approx(p.v2(0) - p.v2(c.x_c)));
    // Running the classical trajectory reaches x_c at arrival_time.
    CHECK(p.delta_x * (1 - std::cos(p.omega2 * c.arrival_time)) == doctest::Approx(c.x_c));

    ModelParams doubled;
    doubled.alpha = 0.2;
    const ModelParams q = calibrate_offset(doubled, 11.5 * 0.2 * 0.2);
    CHECK(q.delta_x == doctest::Approx(p.delta_x).epsilon(1e-6));
    const CrossingInfo cq = locate_crossing(q);
    CHECK(cq.v_c * cq.slope_diff == doctest::Approx(1.0 / 11.5).epsilon(1e-6));
    CHECK(c.v_c * c.slope_diff == doctest::Approx(1.0 / 11.5).epsilon(1e-6));

    CHECK(kind_of([] { calibrate_offset(ModelParams{}, 1e9); }) == ErrorKind::calibration_failure);
    CHECK(kind_of([] { calibrate_offset(ModelParams{}, -1.0); }) == ErrorKind::invalid_argument);
  }

  TEST_CASE("rabi frequency") {
    CHECK(rabi_frequency(default_params()) == doctest::Approx(3.7686).epsilon(1e-4));
    ModelParams p;
    p.e_in = 0.0;
    p.alpha = 1.0;
    CHECK(rabi_frequency(p) == 1.0);
    p.e_in = 3.0;
    p.alpha = 4.0;
    CHECK(rabi_frequency(p) == 5.0);
  }

  TEST_CASE("decoupled surfaces keep their populations") {
    ModelParams p = default_params();
    p.alpha = 0.0;
    const Grid g = build_grid(p, 128);
    const Hamiltonian h = build_hamiltonian(p, g);
    const int n = g.n_points;
    Wavefunction psi = initial_state(p, g);
    psi.head(n) = test::packet(g, 1, 30.0, 0.0, p.sigma0()).head(n) * std::sqrt(0.3);
    psi.tail(n) *= std::sqrt(0.7);
    EvolveOptions o;
    o.t_final = 300.0;
    const auto r = evolve(DensityState::pure(psi), h, {}, PulseSchedule{}, o);
    for (const auto& rec : r.records) {
      CHECK(rec.pop1 == doctest::Approx(0.3).epsilon(1e-10));
      CHECK(rec.pop2 == doctest::Approx(0.7).epsilon(1e-10));
    }
  }

  TEST_CASE("mass only rescales the coordinate") {
    auto run = [](double mass) {
      ModelParams p;
      p.mass = mass;
      p = calibrate_offset(p, 11.5 * p.alpha * p.alpha);
      const double scale = 1.0 / std::sqrt(mass);
      const Grid g = build_grid(p, 256, kDefaultPadding * scale);
      SinkShape shape;
      shape.onset *= scale;
      shape.width *= scale;
      const auto sinks = make_sinks(p, g, shape);
      EvolveOptions o;
      o.t_final = 300.0;
      const auto schedule = make_schedule({{90.0, 120.0, 2.0}});
      const auto r = evolve(DensityState::pure(initial_state(p, g)), build_hamiltonian(p, g),
                            sinks, schedule, o);
      return std::make_pair(p.delta_x, r);
    };
    const auto [dx1, r1] = run(1.0);
    const auto [dx4, r4] = run(4.0);
    CHECK(dx4 == doctest::Approx(dx1 / 2).epsilon(1e-9));
    REQUIRE(r1.records.size() == r4.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
      CHECK(std::abs(r1.records[i].pop1 - r4.records[i].pop1) < 1e-8);
      CHECK(std::abs(r1.records[i].pop2 - r4.records[i].pop2) < 1e-8);
      CHECK(std::abs(r1.records[i].absorbed_trans - r4.records[i].absorbed_trans) < 1e-8);
      CHECK(std::abs(r1.records[i].absorbed_cis - r4.records[i].absorbed_cis) < 1e-8);
    }
  }
}
