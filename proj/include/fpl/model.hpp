#pragma once

// Physical data model: oscillator network, drive schedules, calibration and
// noise settings. Internal units are SI with angular frequencies in rad/s;
// conversion from the Hz/us/mV config units happens in config.cpp only.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fpl {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

namespace phys {
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kEpsilon0 = 8.8541878128e-12;         // F/m
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kMassMg24 = 23.985041697 * kAtomicMassUnit;
}  // namespace phys

using SiteId = int;
using Vec2 = std::array<double, 2>;

struct Site {
  SiteId id = 0;
  double omega = 0.0;          // rad/s
  double anharmonicity = 0.0;  // Kerr shift, rad/s per quantum
  std::optional<Vec2> position;
};

/// Sites plus symmetric pairwise coupling rates Omega_C (rad/s).
/// Pair keys are stored with first < second.
class OscillatorNetwork {
 public:
  OscillatorNetwork() = default;

  /// Throws Error(Domain/Config) when the sites or couplings break an invariant.
  OscillatorNetwork(std::vector<Site> sites,
                    std::map<std::pair<SiteId, SiteId>, double> couplings);

  const std::vector<Site>& sites() const { return sites_; }
  const std::map<std::pair<SiteId, SiteId>, double>& couplings() const {
    return couplings_;
  }
  std::size_t size() const { return sites_.size(); }
  const Site& site(SiteId id) const { return sites_.at(static_cast<std::size_t>(id)); }
  bool has_site(SiteId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < sites_.size();
  }

  /// Omega_C for the (unordered) pair, zero when not coupled.
  double coupling(SiteId a, SiteId b) const;

  /// Reference frame frequency for envelope integration: mean static omega.
  double reference_omega() const;

 private:
  std::vector<Site> sites_;
  std::map<std::pair<SiteId, SiteId>, double> couplings_;
};

struct ModulationTone {
  SiteId site = 0;
  double Omega_M = 0.0;  // rad/s
  double eta = 0.0;
  double phi_M = 0.0;  // rad
};

struct ExcitationTone {
  SiteId site = 0;
  double Omega_E = 0.0;  // rad/s
  double phi_E = 0.0;
  double strength = 0.0;  // resonant amplitude growth d|alpha|/dt = strength/2
};

enum class RampKind { Phase, Amplitude };

/// Linear ramp of a site's modulation phase (or index) from its value at the
/// end of the previous segment to this segment's tone value.
struct Ramp {
  RampKind kind = RampKind::Phase;
  SiteId site = 0;
  double duration = 0.0;  // s
};

struct ScheduleSegment {
  double duration = 0.0;  // s
  std::vector<ModulationTone> modulations;
  std::vector<ExcitationTone> excitations;
  std::vector<Ramp> ramps;

  const ModulationTone* modulation_for(SiteId site) const;
};

struct DriveSchedule {
  std::vector<ScheduleSegment> segments;

  double total_duration() const;
  /// Segment start times; size segments.size() + 1 with the end time last.
  std::vector<double> boundaries() const;
};

/// Piecewise-linear voltage -> eta table measured at a reference modulation
/// frequency. eta scales as 1/Omega_M away from the reference.
struct IndexCalibration {
  std::vector<std::pair<double, double>> table;  // (volts, eta)
  double reference_Omega_M = 0.0;                // rad/s
};

struct NoiseModel {
  std::optional<double> dephasing_tau;  // s; nullopt disables dephasing
  double heating_rate = 0.0;            // quanta/s
  std::uint64_t rng_seed = 0;

  bool enabled() const { return dephasing_tau.has_value() || heating_rate > 0.0; }
};

struct Diagnostic {
  int segment = -1;  // -1 for network-level findings
  std::string reason;
};

/// Pairwise Coulomb coupling between sites at fixed positions. `ion_mass` in
/// kg, `charge` in C; `orientation` holds the per-pair mode-orientation factor
/// g_jk (missing pairs default to 1).
OscillatorNetwork build_network_from_geometry(
    const std::vector<Vec2>& positions, const std::vector<double>& omegas,
    double ion_mass, double charge,
    const std::map<std::pair<SiteId, SiteId>, double>& orientation = {});

double index_from_voltage(const IndexCalibration& cal, double volts, double Omega_M);

/// Checks the network/schedule invariants; empty result means valid.
std::vector<Diagnostic> validate_schedule(const OscillatorNetwork& net,
                                          const DriveSchedule& sched);

}  // namespace fpl
