#include "retinal/schedule.hpp"

#include "retinal/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace retinal {

namespace {

double half_ramp(const PulseSchedule& s) {
  return s.edge == EdgeShape::smooth ? 0.5 * s.ramp_fs : 0.0;
}

// Unit step smoothed over [-r, r]: 0 before, 1 after, 1/2 at 0.
double smooth_step(double u, double r) {
  if (r <= 0.0) return u >= 0.0 ? 1.0 : 0.0;
  if (u <= -r) return 0.0;
  if (u >= r) return 1.0;
  return 0.5 * (1.0 + std::sin(0.5 * std::numbers::pi * u / r));
}

// Antiderivative of smooth_step, zero far to the left.
double smooth_step_integral(double u, double r) {
  if (r <= 0.0) return std::max(u, 0.0);
  if (u <= -r) return 0.0;
  if (u >= r) return u;
  const double c = 2.0 * r / std::numbers::pi;
  return 0.5 * (u + r) - 0.5 * c * std::cos(0.5 * std::numbers::pi * u / r);
}

}  // namespace

void PulseSchedule::validate() const {
  if (edge == EdgeShape::smooth && !(ramp_fs > 0.0))
    fail(ErrorKind::invalid_argument, "smooth edges need ramp_fs > 0");
  const double r = half_ramp(*this);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (!(w.t_on < w.t_off))
      fail(ErrorKind::invalid_argument, fmt::format("window {} has t_on >= t_off", i));
    if (!(w.gamma >= 0.0))
      fail(ErrorKind::invalid_argument, fmt::format("window {} has negative gamma", i));
    if (w.t_off - w.t_on < 2.0 * r)
      fail(ErrorKind::invalid_argument, fmt::format("window {} is shorter than its ramps", i));
    if (i > 0 && windows[i - 1].t_off + r > w.t_on - r)
      fail(ErrorKind::invalid_argument,
           fmt::format("windows {} and {} overlap or are unsorted", i - 1, i));
  }
}

double PulseSchedule::end_time() const {
  return windows.empty() ? 0.0 : windows.back().t_off + half_ramp(*this);
}

PulseSchedule make_schedule(std::vector<MeasurementWindow> windows, EdgeShape edge,
                            double ramp_fs) {
  PulseSchedule s{std::move(windows), edge, ramp_fs};
  s.validate();
  return s;
}

double gamma_at(const PulseSchedule& schedule, double t) {
  const double r = half_ramp(schedule);
  for (const auto& w : schedule.windows) {
    if (schedule.edge == EdgeShape::rectangular) {
      if (t >= w.t_on && t <= w.t_off) return w.gamma;
    } else if (t > w.t_on - r && t < w.t_off + r) {
      return w.gamma * smooth_step(t - w.t_on, r) * (1.0 - smooth_step(t - w.t_off, r));
    }
  }
  return 0.0;
}

double integrated_gamma(const PulseSchedule& schedule, double t0, double t1) {
  const double r = half_ramp(schedule);
  double total = 0.0;
  // Each window is the difference of two smoothed steps; the steps of a
  // window never overlap, so the product above is this same difference.
  for (const auto& w : schedule.windows) {
    const double on = smooth_step_integral(t1 - w.t_on, r) - smooth_step_integral(t0 - w.t_on, r);
    const double off =
        smooth_step_integral(t1 - w.t_off, r) - smooth_step_integral(t0 - w.t_off, r);
    total += w.gamma * (on - off);
  }
  return total;
}

double peak_gamma(const PulseSchedule& schedule) {
  double g = 0.0;
  for (const auto& w : schedule.windows) g = std::max(g, w.gamma);
  return g;
}

double photon_flux_to_rate(double photon_current, double cross_section) {
  if (photon_current < 0.0 || cross_section < 0.0)
    fail(ErrorKind::invalid_argument, "photon current and cross section must be non-negative");
  return 0.5 * photon_current * cross_section;
}

}  // namespace retinal
