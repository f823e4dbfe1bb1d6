#pragma once

#include <optional>
#include <random>
#include <vector>

#include "fpl/drive.hpp"
#include "fpl/model.hpp"
#include "fpl/state.hpp"

namespace fpl {

/// Envelope (slowly varying amplitude) engine. In the frame rotating at the
/// mean static frequency omega_ref it integrates
///
///   i dalpha_j/dt = [omega_j(t) - omega_ref] alpha_j + sum_k Omega_C,jk alpha_k
///                   + K_j |alpha_j|^2 alpha_j - (F_j/2) exp(-i[(Omega_E - omega_ref) t + phi_E])
///
/// with classical RK4 at a fixed step. Only the coupling is rotating-wave
/// approximated; the frequency modulation is kept exactly.
///
/// With noise enabled, each site's frequency carries Ornstein-Uhlenbeck jitter
/// with correlation time tau/100 and variance 1/(tau * tau_c), so the
/// single-site coherence decays as exp(-t/tau) for t >> tau_c. Heating adds
/// complex Gaussian kicks with <|dalpha|^2> = heating_rate * dt.
class EnvelopePropagator {
 public:
  /// `net` and `sched` must outlive the propagator. `dt_max` <= 0 selects
  /// 200 steps per fastest envelope period (Kerr rotation included at
  /// propagation time). A positive
  /// value coarser than 20 steps per period throws Error(Config).
  EnvelopePropagator(const OscillatorNetwork& net, const DriveSchedule& sched,
                     std::optional<NoiseModel> noise = std::nullopt, double dt_max = 0.0);

  /// Advances `state` (in the rotating frame) to `t_to`. Backward propagation
  /// (t_to < state.time) is allowed when noise is off.
  void propagate(AmplitudeState& state, double t_to);

  double step() const { return dt_; }
  double reference_omega() const { return omega_ref_; }

 private:
  struct Pair {
    std::size_t a, b;
    double rate;
  };

  void rhs(std::size_t segment, double t, const std::vector<cplx>& y,
           std::vector<cplx>& dy) const;
  void rk4(std::size_t segment, double t, double h, std::vector<cplx>& y);
  void apply_noise(double h, std::vector<cplx>& y);
  double step_for(const AmplitudeState& state) const;

  const OscillatorNetwork* net_;
  DriveEvaluator drive_;
  std::optional<NoiseModel> noise_;
  double dt_ = 0.0;
  double omega_ref_ = 0.0;
  double tau_c_ = 0.0;
  std::vector<Pair> pairs_;
  std::vector<double> jitter_;
  std::mt19937_64 rng_;
  std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

/// Runs the envelope engine from `initial` and records the state at each
/// requested time (ascending, >= initial.time). Amplitudes are reported in
/// the rotating frame; n_bar is frame independent.
Trajectory integrate_envelope(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const AmplitudeState& initial,
                              const std::optional<NoiseModel>& noise, double dt_max,
                              const std::vector<double>& sample_times);

/// Stable 64-bit hash of a schedule's numeric content.
std::uint64_t schedule_hash(const OscillatorNetwork& net, const DriveSchedule& sched);

}  // namespace fpl
