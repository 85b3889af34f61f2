#include "retinal/sinks.hpp"

#include "propagation.hpp"
#include "retinal/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace retinal {

std::string_view to_string(SinkLabel label) {
  return label == SinkLabel::cis ? "cis" : "trans";
}

std::vector<Sink> make_sinks(const ModelParams& params, const Grid& grid, const SinkShape& shape) {
  if (!(shape.eta >= 0.0) || !(shape.onset >= 0.0) || !(shape.width > 0.0))
    fail(ErrorKind::invalid_argument, "sink shape needs eta >= 0, onset >= 0, width > 0");
  const double cis_edge = -shape.onset;
  const double trans_edge = params.delta_x + shape.onset;
  if (grid.x_min >= cis_edge || grid.x_max <= trans_edge)
    fail(ErrorKind::domain_too_small,
         fmt::format("grid [{:.2f}, {:.2f}] ends before the sink ramps at {:.2f} and {:.2f}",
                     grid.x_min, grid.x_max, cis_edge, trans_edge));

  auto ramp = [&](const Eigen::ArrayXd& depth) {
    const Eigen::ArrayXd u = (depth / shape.width).max(0.0).min(1.0);
    return Eigen::ArrayXd(shape.eta * u.square());
  };

  Sink cis;
  cis.surface = 1;
  cis.label = SinkLabel::cis;
  cis.profile = ramp(cis_edge - grid.x);
  cis.window_lo = grid.x_min;
  cis.window_hi = cis_edge;

  Sink trans;
  trans.surface = 2;
  trans.label = SinkLabel::trans;
  trans.profile = ramp(grid.x - trans_edge);
  trans.window_lo = trans_edge;
  trans.window_hi = grid.x_max;

  return {std::move(cis), std::move(trans)};
}

double sink_reflection(const ModelParams& params, const Grid& grid, const Sink& sink, double dt) {
  ModelParams uncoupled = params;
  uncoupled.alpha = 0.0;
  const Hamiltonian h = build_hamiltonian(uncoupled, grid);
  const CrossingInfo crossing = locate_crossing(params);

  const double sigma = params.sigma0();
  const double direction = sink.label == SinkLabel::cis ? -1.0 : 1.0;
  const double k0 = direction * params.mass * crossing.v_c;
  const Eigen::ArrayXd d = grid.x - crossing.x_c;
  Eigen::ArrayXcd packet = (-d.square() / (4.0 * sigma * sigma)).exp().cast<std::complex<double>>() *
                           (std::complex<double>(0.0, k0) * d).exp();
  packet /= std::sqrt(packet.abs2().sum());

  const int n = grid.n_points;
  Eigen::MatrixXcd state = Eigen::MatrixXcd::Zero(2 * n, 1);
  state.col(0).segment((sink.surface - 1) * n, n) = packet.matrix();

  const double omega = sink.surface == 1 ? params.omega1 : params.omega2;
  const double period = 2.0 * std::numbers::pi / omega;
  const int steps = static_cast<int>(std::ceil(period / dt));
  const Sink only[] = {sink};
  const detail::SplitStepKernel kernel(h, only, period / steps);
  const detail::ColumnPropagator prop(kernel, 1);
  const Eigen::VectorXd weight = Eigen::VectorXd::Ones(1);

  prop.kinetic(state, true);
  for (int s = 0; s < steps; ++s) {
    prop.pointwise(state, weight);
    prop.kinetic(state, s + 1 == steps);
  }
  return state.squaredNorm();
}

SinkShape tune_sink_width(const ModelParams& params, const Grid& grid, SinkShape shape,
                          double max_reflection) {
  const double room = std::max(-shape.onset - grid.x_min, grid.x_max - params.delta_x - shape.onset);
  for (;;) {
    const auto sinks = make_sinks(params, grid, shape);
    const double worst =
        std::max(sink_reflection(params, grid, sinks[0]), sink_reflection(params, grid, sinks[1]));
    if (worst < max_reflection) return shape;
    if (shape.width > room)
      fail(ErrorKind::domain_too_small,
           fmt::format("sinks still reflect {:.3g} with a ramp longer than the grid margin", worst));
    shape.width *= 1.5;
  }
}

Eigen::ArrayXd total_absorber(std::span<const Sink> sinks, int surface, int n_points) {
  Eigen::ArrayXd w = Eigen::ArrayXd::Zero(n_points);
  for (const auto& s : sinks)
    if (s.surface == surface) w += s.profile;
  return w;
}

}  // namespace retinal
