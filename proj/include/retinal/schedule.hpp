#pragma once

#include <vector>

namespace retinal {

/// One interval during which the nonselective measurement runs at `gamma`.
struct MeasurementWindow {
  double t_on = 0.0;   // fs
  double t_off = 0.0;  // fs
  double gamma = 0.0;  // fs^-1

  bool operator==(const MeasurementWindow&) const = default;
};

enum class EdgeShape { rectangular, smooth };

/// Piecewise measurement rate gamma(t).
///
/// Smooth edges are raised-cosine ramps of total width `ramp_fs` centred on
/// the nominal edge, so gamma is half height at t_on and t_off and the
/// area under each window is the same as for the rectangular pulse.
struct PulseSchedule {
  std::vector<MeasurementWindow> windows;
  EdgeShape edge = EdgeShape::rectangular;
  double ramp_fs = 0.0;

  /// Sorted, non-overlapping (including ramps), t_on < t_off, gamma >= 0.
  void validate() const;

  /// Latest instant at which gamma can be non-zero.
  double end_time() const;

  bool operator==(const PulseSchedule&) const = default;
};

/// Throws invalid_argument when the windows are unsorted, overlap or carry
/// a negative rate.
PulseSchedule make_schedule(std::vector<MeasurementWindow> windows,
                            EdgeShape edge = EdgeShape::rectangular, double ramp_fs = 0.0);

double gamma_at(const PulseSchedule& schedule, double t);

/// Integral of gamma over [t0, t1], exact for both edge shapes.
double integrated_gamma(const PulseSchedule& schedule, double t0, double t1);

/// Largest rate anywhere in the schedule.
double peak_gamma(const PulseSchedule& schedule);

/// Measurement rate produced by illuminating the excited state: half the
/// absorption rate (photon current times absorption cross section).
double photon_flux_to_rate(double photon_current, double cross_section);

}  // namespace retinal
