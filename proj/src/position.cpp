#include "fpl/position.hpp"

#include <cmath>
#include <sstream>

#include "fpl/envelope.hpp"
#include "fpl/errors.hpp"

namespace fpl {

namespace {

// Forest-Ruth / Yoshida fourth-order weights.
const double kCbrt2 = std::cbrt(2.0);
const double kW1 = 1.0 / (2.0 - kCbrt2);
const double kW0 = -kCbrt2 / (2.0 - kCbrt2);

}  // namespace

PositionPropagator::PositionPropagator(const OscillatorNetwork& net,
                                       const DriveSchedule& sched, double dt)
    : net_(&net), drive_(net, sched) {
  double omega_max = 0.0;
  for (const auto& s : net.sites()) {
    double w = s.omega;
    for (const auto& seg : sched.segments) {
      if (const auto* m = seg.modulation_for(s.id)) w = std::max(w, s.omega + m->eta * m->Omega_M);
    }
    omega_max = std::max(omega_max, w);
  }
  const double limit = kTwoPi / (50.0 * omega_max);
  if (dt > 0.0) {
    if (dt > limit) {
      std::ostringstream os;
      os << "step size " << dt << " s infeasible: need <= " << limit << " s";
      fail(ErrorKind::Config, os.str());
    }
    dt_ = dt;
  } else {
    dt_ = kTwoPi / (200.0 * omega_max);
  }
  const std::size_t n = net.size();
  lambda_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = net.sites()[j];
    lambda_[j] = 8.0 * s.omega * s.omega * s.anharmonicity / 3.0;
  }
  kappa_.assign(n, std::vector<double>(n, 0.0));
  for (const auto& [key, c] : net.couplings()) {
    const auto a = static_cast<std::size_t>(key.first);
    const auto b = static_cast<std::size_t>(key.second);
    kappa_[a][b] = 2.0 * c;
    kappa_[b][a] = 2.0 * c;
  }
  acc_.resize(n);
  omega_now_.resize(n);
}

void PositionPropagator::accel(std::size_t segment, double t, const std::vector<double>& x,
                               std::vector<double>& a) const {
  const std::size_t n = x.size();
  for (std::size_t j = 0; j < n; ++j) {
    omega_now_[j] = drive_.instantaneous_omega(segment, static_cast<SiteId>(j), t);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double w = omega_now_[j];
    double f = -w * w * x[j] - lambda_[j] * x[j] * x[j] * x[j];
    for (std::size_t k = 0; k < n; ++k) {
      if (kappa_[j][k] != 0.0) f -= kappa_[j][k] * std::sqrt(w * omega_now_[k]) * x[k];
    }
    a[j] = f;
  }
  for (const auto& e : drive_.schedule().segments[segment].excitations) {
    const auto j = static_cast<std::size_t>(e.site);
    a[j] += e.strength * std::sqrt(net_->sites()[j].omega) * std::cos(e.Omega_E * t + e.phi_E);
  }
}

void PositionPropagator::leapfrog(std::size_t segment, double& t, double h,
                                  std::vector<double>& x, std::vector<double>& v) {
  const std::size_t n = x.size();
  for (std::size_t j = 0; j < n; ++j) x[j] += 0.5 * h * v[j];
  t += 0.5 * h;
  accel(segment, t, x, acc_);
  for (std::size_t j = 0; j < n; ++j) v[j] += h * acc_[j];
  for (std::size_t j = 0; j < n; ++j) x[j] += 0.5 * h * v[j];
  t += 0.5 * h;
}

void PositionPropagator::propagate(PhaseSpaceState& state, double t_to) {
  if (state.x.size() != net_->size() || state.v.size() != net_->size()) {
    fail(ErrorKind::Config, "phase-space state size does not match network");
  }
  const auto& bounds = drive_.boundaries();
  const double dir = t_to >= state.time ? 1.0 : -1.0;
  while (dir * (t_to - state.time) > 0.0) {
    double stop = t_to;
    for (double b : bounds) {
      if (dir > 0 ? (b > state.time && b < stop) : (b < state.time && b > stop)) stop = b;
    }
    const double len = stop - state.time;
    const std::size_t seg = drive_.segment_at(state.time + 0.5 * len);
    const auto steps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::fabs(len) / dt_ - 1e-9)));
    const double h = len / static_cast<double>(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      double t = state.time + static_cast<double>(i) * h;
      leapfrog(seg, t, kW1 * h, state.x, state.v);
      leapfrog(seg, t, kW0 * h, state.x, state.v);
      leapfrog(seg, t, kW1 * h, state.x, state.v);
    }
    for (std::size_t j = 0; j < state.x.size(); ++j) {
      if (!std::isfinite(state.x[j]) || !std::isfinite(state.v[j])) {
        std::ostringstream os;
        os << "numerical blow-up before t = " << stop << " s";
        fail(ErrorKind::Numerical, os.str());
      }
    }
    state.time = stop;
  }
}

AmplitudeState PositionPropagator::to_amplitudes(const PhaseSpaceState& s) const {
  AmplitudeState out;
  out.time = s.time;
  const std::size_t seg = drive_.segment_at(s.time);
  const cplx frame = std::polar(1.0, net_->reference_omega() * s.time);
  for (std::size_t j = 0; j < s.x.size(); ++j) {
    const double w = drive_.instantaneous_omega(seg, static_cast<SiteId>(j), s.time);
    out.alphas.push_back(std::sqrt(w) * cplx(s.x[j], s.v[j] / w) * frame);
  }
  return out;
}

PhaseSpaceState PositionPropagator::from_amplitudes(const AmplitudeState& a) const {
  PhaseSpaceState out;
  out.time = a.time;
  const std::size_t seg = drive_.segment_at(a.time);
  const cplx frame = std::polar(1.0, -net_->reference_omega() * a.time);
  for (std::size_t j = 0; j < a.alphas.size(); ++j) {
    const double w = drive_.instantaneous_omega(seg, static_cast<SiteId>(j), a.time);
    const cplx lab = a.alphas[j] * frame / std::sqrt(w);
    out.x.push_back(lab.real());
    out.v.push_back(lab.imag() * w);
  }
  return out;
}

double PositionPropagator::energy(const PhaseSpaceState& s) const {
  const std::size_t seg = drive_.segment_at(s.time);
  double e = 0.0;
  const std::size_t n = s.x.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    w[j] = drive_.instantaneous_omega(seg, static_cast<SiteId>(j), s.time);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double x2 = s.x[j] * s.x[j];
    e += 0.5 * s.v[j] * s.v[j] + 0.5 * w[j] * w[j] * x2 + 0.25 * lambda_[j] * x2 * x2;
    for (std::size_t k = j + 1; k < n; ++k) {
      e += kappa_[j][k] * std::sqrt(w[j] * w[k]) * s.x[j] * s.x[k];
    }
  }
  return e;
}

namespace {

Trajectory run_position(PositionPropagator& prop, const OscillatorNetwork& net,
                        const DriveSchedule& sched, PhaseSpaceState state,
                        const std::vector<double>& sample_times) {
  Trajectory traj;
  traj.metadata.schedule_hash = schedule_hash(net, sched);
  traj.metadata.engine = "position";
  traj.metadata.step = prop.step();
  double last = -INFINITY;
  for (double t : sample_times) {
    if (t <= last || t < state.time) {
      fail(ErrorKind::Config, "sample times must be strictly increasing and >= start");
    }
    prop.propagate(state, t);
    traj.samples.push_back(prop.to_amplitudes(state));
    last = t;
  }
  return traj;
}

}  // namespace

Trajectory integrate_position(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const AmplitudeState& initial, double dt,
                              const std::vector<double>& sample_times) {
  PositionPropagator prop(net, sched, dt);
  return run_position(prop, net, sched, prop.from_amplitudes(initial), sample_times);
}

Trajectory integrate_position(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const PhaseSpaceState& initial, double dt,
                              const std::vector<double>& sample_times) {
  PositionPropagator prop(net, sched, dt);
  return run_position(prop, net, sched, initial, sample_times);
}

}  // namespace fpl
