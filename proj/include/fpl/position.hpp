#pragma once

#include <vector>

#include "fpl/drive.hpp"
#include "fpl/model.hpp"
#include "fpl/state.hpp"

namespace fpl {

/// Mass-scaled coordinates: alpha_j = sqrt(omega_j(t)) * (x_j + i v_j / omega_j(t)),
/// so that |alpha|^2 is the oscillator action in quanta.
struct PhaseSpaceState {
  std::vector<double> x;
  std::vector<double> v;
  double time = 0.0;
};

/// Position-space engine without rotating-wave approximations:
///
///   x_j'' = -omega_j(t)^2 x_j - lambda_j x_j^3 - sum_k kappa_jk(t) x_k
///           + F_j sqrt(omega_j) cos(Omega_E t + phi_E)
///
/// kappa_jk(t) = 2 sqrt(omega_j(t) omega_k(t)) Omega_C,jk keeps the
/// instantaneous normal-mode splitting at 2 Omega_C; lambda_j = 8 omega_j^2 K_j / 3
/// reproduces the envelope Kerr shift K_j per quantum. Integrated with the fourth-order Forest-Ruth
/// composition of drift-kick-drift leapfrog, which is symplectic.
class PositionPropagator {
 public:
  /// `net` and `sched` are referenced, not copied, and must outlive the
  /// propagator. `dt` <= 0 picks 200 steps per period of the fastest instantaneous
  /// frequency; a step above 2 pi / (50 omega_max) throws Error(Config).
  PositionPropagator(const OscillatorNetwork& net, const DriveSchedule& sched, double dt = 0.0);

  void propagate(PhaseSpaceState& state, double t_to);

  double step() const { return dt_; }
  const DriveEvaluator& drive() const { return drive_; }

  AmplitudeState to_amplitudes(const PhaseSpaceState& s) const;
  PhaseSpaceState from_amplitudes(const AmplitudeState& a) const;

  /// Mechanical energy in scaled coordinates, including coupling and quartic terms.
  double energy(const PhaseSpaceState& s) const;

 private:
  void accel(std::size_t segment, double t, const std::vector<double>& x,
             std::vector<double>& a) const;
  void leapfrog(std::size_t segment, double& t, double h, std::vector<double>& x,
                std::vector<double>& v);

  const OscillatorNetwork* net_;
  DriveEvaluator drive_;
  double dt_ = 0.0;
  std::vector<double> lambda_;
  std::vector<std::vector<double>> kappa_;
  std::vector<double> acc_;
  mutable std::vector<double> omega_now_;
};

/// Position-engine trajectory. Initial and reported amplitudes are in the
/// envelope frame (rotating at the mean static frequency), so the output is
/// directly comparable with integrate_envelope.
Trajectory integrate_position(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const AmplitudeState& initial, double dt,
                              const std::vector<double>& sample_times);

/// Same, from an explicit phase-space state.
Trajectory integrate_position(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const PhaseSpaceState& initial, double dt,
                              const std::vector<double>& sample_times);

}  // namespace fpl
