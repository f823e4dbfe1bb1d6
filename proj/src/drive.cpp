#include "fpl/drive.hpp"

#include <algorithm>
#include <cmath>

namespace fpl {

DriveEvaluator::DriveEvaluator(const OscillatorNetwork& net, const DriveSchedule& sched)
    : net_(&net), sched_(&sched), bounds_(sched.boundaries()) {}

std::size_t DriveEvaluator::segment_at(double t) const {
  const auto n = sched_->segments.size();
  if (n == 0) return 0;
  auto it = std::upper_bound(bounds_.begin() + 1, bounds_.end() - 1, t);
  return static_cast<std::size_t>(it - (bounds_.begin() + 1));
}

ModulationState DriveEvaluator::modulation(std::size_t segment, SiteId site,
                                           double t) const {
  const auto& seg = sched_->segments[segment];
  const ModulationTone* tone = seg.modulation_for(site);
  if (!tone) return {};
  ModulationState state{tone->Omega_M, tone->eta, tone->phi_M};
  if (seg.ramps.empty()) return state;

  const ModulationTone* prev =
      segment > 0 ? sched_->segments[segment - 1].modulation_for(site) : nullptr;
  const double elapsed = t - bounds_[segment];
  for (const auto& ramp : seg.ramps) {
    if (ramp.site != site) continue;
    const double f = ramp.duration > 0.0 ? std::clamp(elapsed / ramp.duration, 0.0, 1.0) : 1.0;
    if (ramp.kind == RampKind::Phase) {
      const double from = prev ? prev->phi_M : tone->phi_M;
      state.phi = from + (tone->phi_M - from) * f;
    } else {
      const double from = prev ? prev->eta : 0.0;
      state.eta = from + (tone->eta - from) * f;
    }
  }
  return state;
}

double DriveEvaluator::instantaneous_omega(std::size_t segment, SiteId site,
                                           double t) const {
  const double omega = net_->site(site).omega;
  const auto m = modulation(segment, site, t);
  if (m.Omega_M == 0.0) return omega;
  return omega + m.eta * m.Omega_M * std::cos(m.Omega_M * t + m.phi);
}

double DriveEvaluator::fastest_envelope_frequency() const {
  const double ref = net_->reference_omega();
  double fastest = 0.0;
  for (const auto& seg : sched_->segments) {
    for (const auto& s : net_->sites()) {
      double f = std::fabs(s.omega - ref);
      if (const auto* m = seg.modulation_for(s.id)) {
        f += m->eta * m->Omega_M + m->Omega_M;
      }
      fastest = std::max(fastest, f);
    }
    for (const auto& e : seg.excitations) {
      fastest = std::max(fastest, std::fabs(e.Omega_E - ref));
    }
  }
  for (const auto& [key, c] : net_->couplings()) fastest = std::max(fastest, c);
  return fastest;
}

}  // namespace fpl
