#include "fpl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "fpl/errors.hpp"

namespace fpl {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Geometry: return "geometry error";
    case ErrorKind::Range: return "range error";
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Misuse: return "misuse error";
    case ErrorKind::Ambiguity: return "ambiguity error";
    case ErrorKind::NotPeriodic: return "not periodic";
    case ErrorKind::Underdetermined: return "under-determined";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

OscillatorNetwork::OscillatorNetwork(
    std::vector<Site> sites, std::map<std::pair<SiteId, SiteId>, double> couplings)
    : sites_(std::move(sites)) {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].id != static_cast<SiteId>(i)) {
      fail(ErrorKind::Config, "site ids must be unique and dense from 0");
    }
    if (!(sites_[i].omega > 0.0) || !std::isfinite(sites_[i].omega)) {
      fail(ErrorKind::Domain, "site " + std::to_string(i) + ": omega must be > 0");
    }
  }
  for (const auto& [key, value] : couplings) {
    auto [a, b] = key;
    if (a == b) fail(ErrorKind::Config, "self-coupling on site " + std::to_string(a));
    if (!has_site(a) || !has_site(b)) {
      fail(ErrorKind::Config, "coupling references unknown site");
    }
    if (!(value >= 0.0) || !std::isfinite(value)) {
      fail(ErrorKind::Domain, "coupling rates must be finite and >= 0");
    }
    const auto ordered = std::minmax(a, b);
    auto it = couplings_.find(ordered);
    if (it != couplings_.end() && it->second != value) {
      fail(ErrorKind::Config, "asymmetric coupling for pair (" + std::to_string(a) +
                                  "," + std::to_string(b) + ")");
    }
    couplings_[ordered] = value;
  }
}

double OscillatorNetwork::coupling(SiteId a, SiteId b) const {
  auto it = couplings_.find(std::minmax(a, b));
  return it == couplings_.end() ? 0.0 : it->second;
}

double OscillatorNetwork::reference_omega() const {
  if (sites_.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : sites_) sum += s.omega;
  return sum / static_cast<double>(sites_.size());
}

const ModulationTone* ScheduleSegment::modulation_for(SiteId site) const {
  for (const auto& m : modulations) {
    if (m.site == site) return &m;
  }
  return nullptr;
}

double DriveSchedule::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

std::vector<double> DriveSchedule::boundaries() const {
  std::vector<double> out{0.0};
  for (const auto& s : segments) out.push_back(out.back() + s.duration);
  return out;
}

OscillatorNetwork build_network_from_geometry(
    const std::vector<Vec2>& positions, const std::vector<double>& omegas,
    double ion_mass, double charge,
    const std::map<std::pair<SiteId, SiteId>, double>& orientation) {
  if (positions.size() != omegas.size()) {
    fail(ErrorKind::Config, "positions and omegas differ in length");
  }
  if (!(ion_mass > 0.0)) fail(ErrorKind::Domain, "ion mass must be > 0");
  std::vector<Site> sites;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!(omegas[i] > 0.0)) {
      fail(ErrorKind::Domain, "site " + std::to_string(i) + ": omega must be > 0");
    }
    sites.push_back(Site{static_cast<SiteId>(i), omegas[i], 0.0, positions[i]});
  }
  const double coulomb = charge * charge / (4.0 * kPi * phys::kEpsilon0 * ion_mass);
  std::map<std::pair<SiteId, SiteId>, double> couplings;
  for (std::size_t j = 0; j < sites.size(); ++j) {
    for (std::size_t k = j + 1; k < sites.size(); ++k) {
      const double d = std::hypot(positions[j][0] - positions[k][0],
                                  positions[j][1] - positions[k][1]);
      if (!(d > 0.0)) {
        std::ostringstream os;
        os << "sites " << j << " and " << k << " coincide";
        fail(ErrorKind::Geometry, os.str());
      }
      const auto key = std::make_pair(static_cast<SiteId>(j), static_cast<SiteId>(k));
      double g = 1.0;
      if (auto it = orientation.find(key); it != orientation.end()) g = it->second;
      couplings[key] = coulomb / (d * d * d * std::sqrt(omegas[j] * omegas[k])) * g;
    }
  }
  return OscillatorNetwork(std::move(sites), std::move(couplings));
}

double index_from_voltage(const IndexCalibration& cal, double volts, double Omega_M) {
  if (!(Omega_M > 0.0)) fail(ErrorKind::Domain, "Omega_M must be > 0");
  const auto& t = cal.table;
  if (t.empty()) fail(ErrorKind::Config, "empty calibration table");
  if (volts < t.front().first || volts > t.back().first) {
    std::ostringstream os;
    os << "voltage " << volts << " V outside calibration range [" << t.front().first
       << ", " << t.back().first << "]";
    fail(ErrorKind::Range, os.str());
  }
  double eta = t.back().second;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (volts <= t[i].first) {
      const auto [u0, e0] = t[i - 1];
      const auto [u1, e1] = t[i];
      eta = u1 == u0 ? e1 : e0 + (e1 - e0) * (volts - u0) / (u1 - u0);
      break;
    }
  }
  if (t.size() == 1) eta = t.front().second;
  return eta * (cal.reference_Omega_M / Omega_M);
}

namespace {

void check_tones(const OscillatorNetwork& net, const ScheduleSegment& seg, int index,
                 std::vector<Diagnostic>& out) {
  auto add = [&](std::string reason) { out.push_back({index, std::move(reason)}); };
  std::set<SiteId> modulated;
  for (const auto& m : seg.modulations) {
    if (!net.has_site(m.site)) {
      add("unknown site " + std::to_string(m.site) + " in modulation tone");
      continue;
    }
    if (!modulated.insert(m.site).second) {
      add("more than one modulation tone on site " + std::to_string(m.site));
    }
    if (!(m.Omega_M > 0.0)) add("modulation frequency must be > 0");
    if (!(m.eta >= 0.0)) add("modulation index must be >= 0");
    // min over a period of omega + eta*Omega_M*cos(.) is omega - eta*Omega_M
    if (m.Omega_M > 0.0 && m.eta >= 0.0 &&
        net.site(m.site).omega - m.eta * m.Omega_M <= 0.0) {
      add("frequency excursion: instantaneous frequency of site " +
          std::to_string(m.site) + " crosses zero");
    }
  }
  for (const auto& e : seg.excitations) {
    if (!net.has_site(e.site)) {
      add("unknown site " + std::to_string(e.site) + " in excitation tone");
      continue;
    }
    if (!(e.Omega_E > 0.0)) add("excitation frequency must be > 0");
    if (!(e.strength >= 0.0)) add("excitation strength must be >= 0");
  }
  for (const auto& r : seg.ramps) {
    if (!net.has_site(r.site)) {
      add("unknown site " + std::to_string(r.site) + " in ramp");
      continue;
    }
    if (!(r.duration >= 0.0) || r.duration > seg.duration) {
      add("ramp duration exceeds segment duration");
    }
    if (!seg.modulation_for(r.site)) {
      add("ramp on site " + std::to_string(r.site) + " without a modulation tone");
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate_schedule(const OscillatorNetwork& net,
                                          const DriveSchedule& sched) {
  std::vector<Diagnostic> out;
  if (sched.segments.empty()) out.push_back({-1, "schedule has no segments"});
  for (std::size_t i = 0; i < sched.segments.size(); ++i) {
    const auto& seg = sched.segments[i];
    if (!(seg.duration > 0.0)) {
      out.push_back({static_cast<int>(i), "segment duration must be > 0"});
    }
    check_tones(net, seg, static_cast<int>(i), out);
  }
  return out;
}

}  // namespace fpl
