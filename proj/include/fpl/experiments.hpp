#pragma once

// Protocol runners. Each builds the drive schedule for one scripted
// experiment, runs it on the requested engine and returns the observed n_bar
// over the scan axes.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpl/model.hpp"
#include "fpl/rwa.hpp"
#include "fpl/state.hpp"

namespace fpl {

enum class ProtocolKind { Spectroscopy, Exchange, PhaseRampMap, DualPhaseScan, TwoPathFringe };
enum class Engine { Envelope, Position, Effective };

std::string to_string(ProtocolKind kind);
std::string to_string(Engine engine);
/// "envelope" | "position" | "effective"; throws Error(Config) otherwise.
Engine engine_from_string(const std::string& name);

struct Axis {
  std::string name;  // column name, SI-derived units in the suffix (e.g. "time_us")
  std::vector<double> values;
};

struct ProtocolResult {
  ProtocolKind kind = ProtocolKind::Exchange;
  Engine engine = Engine::Envelope;
  std::vector<Axis> axes;      // first axis varies slowest
  std::vector<double> values;  // n_bar, row-major over axes
  std::vector<double> sem;     // standard error per value; empty without shot noise
  std::map<std::string, std::vector<double>> overlays;  // analytic curves, same shape
  std::map<std::string, double> scalars;                // derived quantities
  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;

  std::size_t point_count() const;
  /// Throws Error(Validation) on shape mismatch or negative/non-finite values.
  void check() const;
};

struct RunOptions {
  Engine engine = Engine::Envelope;
  std::optional<NoiseModel> noise;  // envelope engine only
  int shots = 200;                  // used when noise is enabled
  double step = 0.0;                // integrator step override (s); 0 = default
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  /// Worker cap; 0 reads FPL_THREADS, falling back to hardware concurrency.
  unsigned threads = 0;
};

/// Runs fn(0..count-1) on a worker pool. Exceptions are rethrown for the
/// lowest failing index after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);
unsigned resolve_thread_count(unsigned requested);

/// Deterministic per-point seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Samples n_bar at `times` from `initial` on one engine. The effective
/// engine handles multi-segment schedules and ramps by evolving piecewise
/// (ramps in 64 constant sub-steps); it rejects excitation tones.
Trajectory simulate(const OscillatorNetwork& net, const DriveSchedule& sched,
                    const AmplitudeState& initial, const std::vector<double>& times,
                    const RunOptions& options, std::uint64_t seed);

/// Effective-model propagation across segments (see simulate()).
AmplitudeState evolve_effective_schedule(const OscillatorNetwork& net, const DriveSchedule& sched,
                                         const AmplitudeState& initial, double t_to);

// ---- spectroscopy -------------------------------------------------------------

struct SpectroscopySpec {
  OscillatorNetwork network;
  SiteId site = 0;
  std::optional<ModulationTone> modulation;  // applied to `site` during the probe
  double t_probe = 50e-6;                    // s
  double strength = 0.0;                     // excitation strength (see ExcitationTone)
  double phi_E = 0.0;
  std::vector<double> probe_omegas;  // rad/s
};

/// Closed-form probe response of an isolated linear site:
/// |alpha(T)|^2 = (F T / 2)^2 |sum_m J_m e^{i m phi} e^{i x_m} sinc(x_m)|^2,
/// x_m = (m Omega_M - (Omega_E - omega)) T / 2.
double spectroscopy_response(double omega, const std::optional<ModulationTone>& modulation,
                             double strength, double t_probe, double probe_omega);

ProtocolResult run_spectroscopy(const SpectroscopySpec& spec, const RunOptions& options);

// ---- exchange -----------------------------------------------------------------

struct ExchangeSpec {
  OscillatorNetwork network;
  DriveSchedule schedule;
  AmplitudeState initial;
  SiteId observe = 1;
  std::vector<double> times;  // s
};

ProtocolResult run_exchange(const ExchangeSpec& spec, const RunOptions& options);

// ---- phase-ramp map -------------------------------------------------------------

struct PhaseRampSpec {
  OscillatorNetwork network;
  std::vector<ModulationTone> modulations;  // steady tones before the change
  SiteId ramp_site = 1;
  double t_prep = 0.0;  // s, start of the phase change
  double t_ramp = 0.0;  // s, 0 = instantaneous
  double t_max = 0.0;   // s
  std::vector<double> dphis;
  std::vector<double> times;
  AmplitudeState initial;
  SiteId observe = 1;
};

/// Two-segment schedule for one phase step of `dphi`.
DriveSchedule phase_ramp_schedule(const PhaseRampSpec& spec, double dphi);

/// Map over (dphi_rad, time_us), normalized so that its maximum is 1.
ProtocolResult run_phase_ramp_map(const PhaseRampSpec& spec, const RunOptions& options);

// ---- dual-modulation phase scan -----------------------------------------------------

struct DualScanSpec {
  OscillatorNetwork network;
  std::vector<ModulationTone> modulations;  // both sites, common Omega_M
  SiteId scan_site = 1;                      // its phase is offset by dphi
  double t_pi = 0.0;  // s; 0 = pi / (2 Omega_C max|J_1|), rounded down to whole modulation periods
  std::vector<double> dphis;
  AmplitudeState initial;
  SiteId observe = 1;
};

ProtocolResult run_dual_phase_scan(const DualScanSpec& spec, const RunOptions& options);

// ---- two-path fringe ------------------------------------------------------------

struct TwoPathSpec {
  OscillatorNetwork network;
  std::vector<ModulationTone> modulations;
  SiteId source_a = 0;
  SiteId middle = 1;
  SiteId source_b = 2;
  double nbar_a = 1.0;
  double nbar_b = 1.0;
  std::optional<double> phase_offset;  // rad; default balances the two path phases
  double t_pi = 0.0;  // s; 0 = pi / (2 sqrt(|t_a|^2 + |t_b|^2)), rounded down to whole periods
  std::vector<double> dphis;
};

/// Offset added to the excitation phase difference so that dphi_E = 0 is
/// constructive: arg H_eff[m][a] - arg H_eff[m][b].
double balanced_phase_offset(const EffectiveModel& model, SiteId a, SiteId middle, SiteId b);

ProtocolResult run_two_path_fringe(const TwoPathSpec& spec, const RunOptions& options);

}  // namespace fpl
