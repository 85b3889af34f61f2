#pragma once

// Complex absorbing potentials that stand in for vibrational relaxation
// once a packet has reached the bottom of the cis or trans well.

#include "retinal/model.hpp"

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace retinal {

enum class SinkLabel { cis, trans };

std::string_view to_string(SinkLabel label);

struct Sink {
  int surface = 1;  // electronic index, 1 or 2
  SinkLabel label = SinkLabel::cis;
  Eigen::ArrayXd profile;  // W(x) >= 0, fs^-1
  double window_lo = 0.0;  // support of the profile
  double window_hi = 0.0;
};

/// Quadratic ramp W = eta * min(((d - onset) / width)^2, 1) where d is the
/// distance past the well minimum, measured away from the crossing. The cis
/// sink sits on surface 1 left of x = 0, the trans sink on surface 2 right
/// of x = delta_x. The onset keeps the ramp off the initial packet and off
/// the turning points of packets that have not reacted yet.
struct SinkShape {
  double eta = 1.0;     // fs^-1
  double onset = 10.0;  // distance from the minimum where the ramp starts
  double width = 30.0;  // ramp length

  bool operator==(const SinkShape&) const = default;
};

/// Cis and trans sinks, in that order. Throws domain_too_small when the
/// grid ends before the ramp starts.
std::vector<Sink> make_sinks(const ModelParams& params, const Grid& grid,
                             const SinkShape& shape = {});

/// Norm of a unit test packet that survives one full oscillation on the
/// sink's surface, starting at the crossing and heading into the sink with
/// the speed a reacting packet has there. Everything that is not absorbed
/// comes back, so this bounds what the sink reflects.
double sink_reflection(const ModelParams& params, const Grid& grid, const Sink& sink,
                       double dt = 0.1);

/// Widens `shape.width` by half until both sinks reflect less than
/// `max_reflection`, within the grid.
SinkShape tune_sink_width(const ModelParams& params, const Grid& grid, SinkShape shape,
                          double max_reflection = 0.01);

/// Sum of profiles acting on the given surface.
Eigen::ArrayXd total_absorber(std::span<const Sink> sinks, int surface, int n_points);

}  // namespace retinal
