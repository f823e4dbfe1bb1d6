#pragma once

// Leading-order Floquet (rotating-wave) description of modulated, coupled
// oscillators.
//
// Each site j is viewed in the frame
//
//   beta_j = alpha_j * exp(i [(nu_j - omega_ref) t + eta_j sin(Omega_M t + phi_j)])
//
// with alpha_j the envelope amplitude and nu_j = omega_j - delta_j a frame
// frequency chosen so that resonant channels become stationary. Jacobi-Anger
// expansion of the coupling then leaves
//
//   i dbeta/dt = H_eff beta,   H_eff[j][j] = delta_j,
//   H_eff[j][k] = Omega_C J_m(eta_rel) exp(i m psi),  m = (nu_k - nu_j) / Omega_M,
//
// where eta_rel exp(i psi) = eta_j exp(i phi_j) - eta_k exp(i phi_k).
//
// Sign convention: for one modulated site k and an unmodulated partner j whose
// carrier overlaps sideband s of k (omega_k + s Omega_M = omega_j), the hop
// into the modulated site is H_eff[k][j] = Omega_C J_s(eta) exp(i s phi_M).
// The exchange rate is Omega_AC = 2 |t|: n_1(t) = n_0 sin^2(Omega_AC t / 2).

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fpl/model.hpp"
#include "fpl/state.hpp"

namespace fpl {

struct Channel {
  int order = 0;
  double frequency = 0.0;  // rad/s: omega + order * Omega_M
  double weight = 0.0;     // J_order(eta)
};

struct ChannelSpectrum {
  std::vector<Channel> channels;  // orders -m_max .. m_max

  double weight(int order) const;
};

/// ceil(eta) + 12: truncation used wherever Bessel sums appear.
int channel_truncation(double eta);

ChannelSpectrum channel_weights(double eta, int m_max, double omega = 0.0,
                                double Omega_M = 0.0);

/// Hop into a modulated site from an unmodulated one through sideband `s`
/// (see the convention above). `mismatch` = Delta_omega - s * Omega_M only
/// enters the effective model as an onsite detuning; s = 0 with nonzero
/// mismatch is a misuse.
cplx effective_coupling_single(double Omega_C, double eta, double phi_M, int s,
                               double mismatch = 0.0);

/// Hop H_eff[1][0] for two modulated sites sharing Omega_M with
/// omega_1 + s Omega_M = omega_0, from the relative-modulation phasor.
cplx effective_coupling_dual(double Omega_C, double eta0, double eta1, double phi0,
                             double phi1, int s);

/// The same hop as an explicit channel sum
/// sum_b J_{b+s}(eta1) J_b(eta0) exp(i[(b+s) phi1 - b phi0]).
cplx effective_coupling_dual_channel_sum(double Omega_C, double eta0, double eta1,
                                         double phi0, double phi1, int s);

struct EffectiveModel {
  std::map<std::pair<SiteId, SiteId>, cplx> hoppings;  // key (j<k) -> H_eff[j][k]
  std::vector<double> onsite;                           // delta_j, rad/s

  // Frame data for converting envelope amplitudes to and from beta.
  double omega_ref = 0.0;
  double Omega_M = 0.0;
  std::vector<double> frame_omega;  // nu_j
  std::vector<double> eta;
  std::vector<double> phi;

  std::size_t size() const { return onsite.size(); }
  /// H_eff[j][k]; zero when the pair has no open channel.
  cplx hop(SiteId j, SiteId k) const;
  Eigen::MatrixXcd hamiltonian() const;

  AmplitudeState to_frame(const AmplitudeState& envelope) const;
  AmplitudeState from_frame(const AmplitudeState& beta) const;
};

/// Builds H_eff for one steady segment. Pairs without a near-resonant
/// (|Delta_omega - m Omega_M| < 10 Omega_C) channel of nonzero weight get no
/// hop; two competing channels throw Error(Ambiguity).
EffectiveModel build_effective_model(const OscillatorNetwork& net, const ScheduleSegment& seg);

/// Single-segment schedule overload; ramps are rejected.
EffectiveModel build_effective_model(const OscillatorNetwork& net, const DriveSchedule& sched);

/// Sum of arg(H_eff[next][current]) around the cycle, folded to (-pi, pi].
double plaquette_flux(const EffectiveModel& model, const std::vector<SiteId>& cycle);

/// beta(t) = exp(-i H_eff t) beta(0) via Hermitian eigendecomposition.
AmplitudeState evolve_effective(const EffectiveModel& model, const AmplitudeState& initial,
                                double t);

/// Envelope-frame amplitudes propagated by the effective model from
/// `envelope.time` to `t_to` (frame transforms applied at both ends).
AmplitudeState evolve_effective_envelope(const EffectiveModel& model,
                                         const AmplitudeState& envelope, double t_to);

}  // namespace fpl
