#pragma once

#include <vector>

#include "fpl/model.hpp"

namespace fpl {

/// Modulation parameters of one site at an instant (ramps applied).
struct ModulationState {
  double Omega_M = 0.0;  // 0 when the site is not modulated
  double eta = 0.0;
  double phi = 0.0;
};

/// Evaluates the schedule's tones at a given time. Lookups take the segment
/// index explicitly so that integrator stages landing exactly on a boundary
/// stay in the segment being integrated.
class DriveEvaluator {
 public:
  DriveEvaluator(const OscillatorNetwork& net, const DriveSchedule& sched);

  const DriveSchedule& schedule() const { return *sched_; }
  const std::vector<double>& boundaries() const { return bounds_; }
  std::size_t segment_count() const { return sched_->segments.size(); }

  /// Segment containing t (right-continuous; the last segment for t == end).
  std::size_t segment_at(double t) const;

  ModulationState modulation(std::size_t segment, SiteId site, double t) const;

  /// omega_j(t) = omega_j + eta * Omega_M * cos(Omega_M t + phi).
  double instantaneous_omega(std::size_t segment, SiteId site, double t) const;

  /// Fastest frequency in the envelope frame over the whole schedule (rad/s),
  /// used for step-size selection.
  double fastest_envelope_frequency() const;

 private:
  const OscillatorNetwork* net_;
  const DriveSchedule* sched_;
  std::vector<double> bounds_;
};

}  // namespace fpl
